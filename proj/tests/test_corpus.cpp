#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "elabqud/corpus/dataset.hpp"
#include "elabqud/corpus/tokenize.hpp"
#include "elabqud/corpus/window.hpp"
#include "support/synthetic.hpp"

using namespace elabqud;
using namespace elabqud::corpus;

namespace {

Document make_doc(const std::string& id, int n, std::initializer_list<int> elabs = {}) {
  Document d;
  d.doc_id = id;
  for (int i = 0; i < n; ++i) d.sentences.push_back({i, "Sentence number " + std::to_string(i) + ".", false});
  for (int e : elabs) d.sentences[static_cast<std::size_t>(e)].is_elaboration = true;
  return d;
}

std::vector<int> indices(const std::vector<Sentence>& ss) {
  std::vector<int> out;
  for (const auto& s : ss) out.push_back(s.index);
  return out;
}

std::string header() { return R"({"format_version":"elabqud-jsonl/1","kind":"header"})"; }

}  // namespace

// ---- tokenizer ------------------------------------------------------------

TEST(Tokenizer, GoldenFile) {
  std::ifstream f(std::string(ELABQUD_FIXTURES) + "/tokenizer_golden.json");
  ASSERT_TRUE(f);
  auto cases = nlohmann::json::parse(f);
  ASSERT_GT(cases.size(), 20u);
  for (const auto& c : cases) {
    auto expected = c["tokens"].get<std::vector<std::string>>();
    EXPECT_EQ(tokenize(c["input"].get<std::string>()), expected) << "input: " << c["input"];
  }
}

TEST(Tokenizer, DetokenizeRoundTripIsFixpoint) {
  std::ifstream f(std::string(ELABQUD_FIXTURES) + "/tokenizer_golden.json");
  auto cases = nlohmann::json::parse(f);
  for (const auto& c : cases) {
    auto toks = tokenize(c["input"].get<std::string>());
    EXPECT_EQ(tokenize(detokenize(toks)), toks) << "input: " << c["input"];
  }
}

TEST(Tokenizer, RandomTokenSequencesAreIdempotent) {
  static const std::vector<std::string> pieces = {"a", "b.c", ".", ",", "(", ")", "\"", "'", "U.S.", "x", "?",
                                                  "!", ";", "[", "]", "e.g.", "don't", "$3.50", "...", "“", "”"};
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    int n = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      s += pieces[rng() % pieces.size()];
      if (rng() % 3 != 0) s += ' ';
    }
    auto toks = tokenize(s);
    ASSERT_EQ(tokenize(detokenize(toks)), toks) << "input: " << s;
  }
}

TEST(Tokenizer, FingerprintIsStable) {
  EXPECT_EQ(tokenizer_fingerprint(), tokenizer_fingerprint());
  EXPECT_EQ(tokenizer_fingerprint().size(), 16u);
}

// ---- windowing ------------------------------------------------------------

TEST(Window, MiddleOfDocument) {
  auto doc = make_doc("d", 10);
  auto w = extract_window(doc, 5);
  EXPECT_EQ(indices(w.pre), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(indices(w.post), (std::vector<int>{6, 7, 8}));
  EXPECT_EQ(w.elaboration.index, 5);
}

TEST(Window, TruncatesAtEdges) {
  auto doc = make_doc("d", 10);
  auto first = extract_window(doc, 0);
  EXPECT_TRUE(first.pre.empty());
  EXPECT_EQ(indices(first.post), (std::vector<int>{1, 2, 3}));
  auto last = extract_window(doc, 9);
  EXPECT_TRUE(last.post.empty());
  EXPECT_EQ(indices(last.pre), (std::vector<int>{4, 5, 6, 7, 8}));
  auto short_doc = make_doc("s", 2);
  auto w = extract_window(short_doc, 1);
  EXPECT_EQ(indices(w.pre), (std::vector<int>{0}));
  EXPECT_TRUE(w.post.empty());
}

TEST(Window, InvalidIndexIsRangeError) {
  auto doc = make_doc("d", 3);
  EXPECT_THROW(extract_window(doc, 3), RangeError);
  EXPECT_THROW(extract_window(doc, -1), RangeError);
}

TEST(AnchorDistance, SignConvention) {
  auto doc = make_doc("d", 10, {5});
  Dataset ds;
  ds.add_document(doc);
  const auto& inst = ds.add_instance("i", "d", 5, Split::test);
  QUDAnnotation a{"i", "x", "Why?", std::nullopt, 4, false, std::nullopt};
  EXPECT_EQ(anchor_distance(a, inst), 1);
  a.anchor_index = 5;
  EXPECT_EQ(anchor_distance(a, inst), 0);
  a.anchor_index = 6;
  EXPECT_EQ(anchor_distance(a, inst), -1);
  a.instance_id = "other";
  EXPECT_THROW(anchor_distance(a, inst), IntegrityError);
}

TEST(AnchorDistance, AntisymmetricUnderSwap) {
  auto doc = make_doc("d", 12, {2, 3, 4, 5, 6, 7, 8, 9});
  Dataset ds;
  ds.add_document(doc);
  for (int e = 2; e <= 9; ++e) ds.add_instance("i" + std::to_string(e), "d", e, Split::test);
  for (int e = 2; e <= 9; ++e) {
    for (int a = 2; a <= 9; ++a) {
      QUDAnnotation fwd{"i" + std::to_string(e), "x", "q", std::nullopt, a, false, std::nullopt};
      QUDAnnotation rev{"i" + std::to_string(a), "x", "q", std::nullopt, e, false, std::nullopt};
      EXPECT_EQ(anchor_distance(fwd, ds.instance(fwd.instance_id)),
                -anchor_distance(rev, ds.instance(rev.instance_id)));
    }
  }
}

// ---- dataset ----------------------------------------------------------------

TEST(Dataset, LoadsOneLineDocumentAtEdge) {
  std::stringstream in;
  in << header() << "\n"
     << R"({"kind":"document","doc_id":"d1","sentences":[{"index":0,"text":"Football is a rough game.","is_elaboration":false},{"index":1,"text":"Kids play it.","is_elaboration":false},{"index":2,"text":"Players get bounced around.","is_elaboration":true}]})"
     << "\n"
     << R"({"kind":"instance","instance_id":"e1","doc_id":"d1","elab_index":2,"split":"test"})" << "\n"
     << R"({"kind":"annotation","instance_id":"e1","annotator_id":"a1","question":"Why is football a rough game?","target":{"sentence_index":0,"start_token":3,"end_token":5},"anchor_index":0,"is_organizational":false})"
     << "\n";
  auto ds = parse_dataset(in);
  ASSERT_EQ(ds.documents().size(), 1u);
  ASSERT_EQ(ds.instances().size(), 1u);
  const auto& inst = ds.instances()[0];
  EXPECT_EQ(inst.context.pre.size(), 2u);
  EXPECT_EQ(inst.context.post.size(), 0u);
  ASSERT_TRUE(ds.annotations()[0].target);
  EXPECT_EQ(ds.annotations()[0].target->surface_text, "rough game");
}

TEST(Dataset, DanglingAnchorIsIntegrityError) {
  std::stringstream in;
  in << header() << "\n" << nlohmann::json(to_json(make_doc("d", 5, {3}))).dump() << "\n"
     << R"({"kind":"instance","instance_id":"e","doc_id":"d","elab_index":3,"split":"train"})" << "\n"
     << R"({"kind":"annotation","instance_id":"e","annotator_id":"a","question":"q?","target":{"sentence_index":1,"start_token":0,"end_token":1},"anchor_index":99,"is_organizational":false})"
     << "\n";
  EXPECT_THROW(parse_dataset(in), IntegrityError);
}

TEST(Dataset, SchemaViolationNamesLineAndField) {
  std::stringstream in;
  in << header() << "\n" << R"({"kind":"instance","instance_id":"e","doc_id":"d","elab_index":"three","split":"train"})"
     << "\n";
  try {
    parse_dataset(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "elab_index");
  }
}

TEST(Dataset, HeaderRequiredOnFirstLine) {
  std::stringstream in;
  in << nlohmann::json(to_json(make_doc("d", 2))).dump() << "\n";
  EXPECT_THROW(parse_dataset(in), ParseError);
  std::stringstream wrong;
  wrong << R"({"format_version":"other/9"})" << "\n";
  EXPECT_THROW(parse_dataset(wrong), ParseError);
}

TEST(Dataset, RejectsBadObjects) {
  Dataset ds;
  auto doc = make_doc("d", 4, {2});
  ds.add_document(doc);
  EXPECT_THROW(ds.add_document(doc), IntegrityError);
  auto gap = make_doc("g", 3);
  gap.sentences[2].index = 5;
  EXPECT_THROW(ds.add_document(gap), IntegrityError);
  auto blank = make_doc("b", 2);
  blank.sentences[1].text = "   ";
  EXPECT_THROW(ds.add_document(blank), IntegrityError);
  EXPECT_THROW(ds.add_instance("x", "d", 1, Split::test), IntegrityError);  // not an elaboration
  EXPECT_THROW(ds.add_instance("x", "nope", 2, Split::test), IntegrityError);
  ds.add_instance("x", "d", 2, Split::test);
  QUDAnnotation empty_q{"x", "a", "  ", TargetSpan{1, 0, 1, {}}, 1, false, std::nullopt};
  EXPECT_THROW(ds.add_annotation(empty_q), IntegrityError);
  QUDAnnotation org{"x", "a", "", std::nullopt, 1, true, std::nullopt};
  EXPECT_NO_THROW(ds.add_annotation(org));
  QUDAnnotation long_span{"x", "a", "q?", TargetSpan{1, 0, 99, {}}, 1, false, std::nullopt};
  EXPECT_THROW(ds.add_annotation(long_span), IntegrityError);
  QUDAnnotation empty_span{"x", "a", "q?", TargetSpan{1, 2, 2, {}}, 1, false, std::nullopt};
  EXPECT_THROW(ds.add_annotation(empty_span), IntegrityError);
}

// serialize -> parse -> serialize is a fixpoint and parse recovers the object model.
TEST(Dataset, RoundTripOnRandomCorpora) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto ds = synth::synthetic_dataset(seed);
    std::string first = serialize_dataset(ds);
    std::stringstream in(first);
    auto reloaded = parse_dataset(in);
    EXPECT_EQ(reloaded, ds) << "seed " << seed;
    EXPECT_EQ(serialize_dataset(reloaded), first) << "seed " << seed;
  }
}

TEST(Dataset, SaveAndLoadFile) {
  auto ds = synth::synthetic_dataset(99);
  std::string path = ::testing::TempDir() + "/ds.jsonl";
  save_dataset(ds, path);
  auto back = load_dataset(path);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(dataset_fingerprint(back), dataset_fingerprint(ds));
}
