#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "elabqud/corpus/dataset.hpp"

namespace elabqud::analysis {

using nlohmann::json;

struct AgreementReport {
  double fleiss_kappa = 0.0;
  double free_marginal_kappa = 0.0;
  double percent_agreement = 0.0;
  std::size_t n_items = 0;
  std::size_t n_categories = 0;
  std::size_t excluded_items = 0;  // items with fewer than two ratings

  json to_json() const {
    return {{"fleiss_kappa", fleiss_kappa},     {"free_marginal_kappa", free_marginal_kappa},
            {"percent_agreement", percent_agreement}, {"n_items", n_items},
            {"n_categories", n_categories},     {"excluded_items", excluded_items}};
  }
};

// Fleiss' kappa over an item x category count matrix. Items may have different
// numbers of raters; rows with fewer than two ratings are skipped and counted.
// When only one category is ever used, chance agreement is 1 and kappa is
// reported as 1 (every rater agreed on every item).
inline AgreementReport fleiss(const std::vector<std::vector<std::size_t>>& counts) {
  AgreementReport r;
  if (counts.empty()) throw EmptyInputError("agreement needs at least one item");
  std::size_t k = counts.front().size();
  std::vector<double> column(k, 0.0);
  double total = 0.0, p_sum = 0.0;
  for (const auto& row : counts) {
    if (row.size() != k) throw ValidationError("agreement matrix rows differ in width");
    std::size_t n = 0;
    for (auto c : row) n += c;
    if (n < 2) {
      ++r.excluded_items;
      continue;
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      column[j] += static_cast<double>(row[j]);
    }
    double dn = static_cast<double>(n);
    p_sum += (sq - dn) / (dn * (dn - 1.0));
    total += dn;
    ++r.n_items;
  }
  if (r.n_items == 0) throw EmptyInputError("no item has two or more ratings");
  for (double c : column) r.n_categories += c > 0 ? 1 : 0;
  double p_bar = p_sum / static_cast<double>(r.n_items);
  double pe = 0.0;
  for (double c : column) pe += (c / total) * (c / total);
  r.percent_agreement = p_bar;
  r.fleiss_kappa = pe >= 1.0 ? 1.0 : (p_bar - pe) / (1.0 - pe);
  double q = r.n_categories > 1 ? 1.0 / static_cast<double>(r.n_categories) : 1.0;
  r.free_marginal_kappa = q >= 1.0 ? 1.0 : (p_bar - q) / (1.0 - q);
  return r;
}

// Agreement on anchor choice: each instance is an item and each distinct raw
// anchor distance (elab_index - anchor_index) is a category.
inline AgreementReport anchor_agreement(const corpus::Dataset& data) {
  auto groups = data.annotations_by_instance();
  std::set<int> distances;
  for (const auto& a : data.annotations()) distances.insert(corpus::anchor_distance(a, data.instance(a.instance_id)));
  std::map<int, std::size_t> column;
  for (int d : distances) column.emplace(d, column.size());
  std::vector<std::vector<std::size_t>> counts;
  std::size_t excluded = 0;
  // Instances with no annotation at all never enter the matrix.
  for (const auto& inst : data.instances()) {
    auto it = groups.find(inst.instance_id);
    if (it == groups.end()) continue;
    if (it->second.size() < 2) {
      ++excluded;
      continue;
    }
    std::vector<std::size_t> row(column.size(), 0);
    for (const auto* a : it->second) ++row[column.at(corpus::anchor_distance(*a, inst))];
    counts.push_back(std::move(row));
  }
  if (counts.empty()) throw EmptyInputError("no instance has two or more annotations");
  auto r = fleiss(counts);
  r.excluded_items = excluded;
  return r;
}

}  // namespace elabqud::analysis
