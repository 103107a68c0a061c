#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgmc/csv.hpp"
#include "mgmc/matrix.hpp"
#include "mgmc/objective.hpp"
#include "mgmc/population_graph.hpp"

namespace mgmc::data {

enum class Split : std::uint8_t { Train, Val, Test };
const char* to_string(Split split) noexcept;

enum class ColumnRole { Feature, Meta, Label, Ignore };

struct ColumnSchema {
  std::string name;
  ColumnRole role = ColumnRole::Feature;
  double threshold = 0.0;  // meta only
  bool categorical = false;
};

// Sidecar JSON:
//   {"columns": [{"name": "age", "role": "meta", "threshold": 2},
//                {"name": "sex", "role": "meta", "categorical": true},
//                {"name": "dx", "role": "label"}],
//    "default_role": "feature",
//    "classes": ["NC", "MCI", "AD"]}
// Columns not listed take default_role ("feature" unless stated). When
// "classes" is present, labels outside it are rejected.
struct Schema {
  std::vector<ColumnSchema> columns;
  ColumnRole default_role = ColumnRole::Feature;
  std::vector<std::string> classes;

  static Schema from_json(const std::string& text);
  static Schema load(const std::filesystem::path& path);
  std::string to_json() const;
};

// Feature matrix with observation masks, one-hot labels, meta-features and a
// per-row split. Raw values are kept unscaled; the assembled network input is
// standardized with statistics from the training rows' visible entries.
struct MaskedDataset {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  Matrix raw;        // n x m raw-scale values; 0 where never observed
  Matrix baseline;   // n x m, 1 where observed in the source data
  Matrix available;  // n x m, 1 where visible to models (subset of baseline)
  std::vector<std::size_t> labels;
  std::vector<graph::MetaFeature> meta;
  std::vector<Split> split;
  std::optional<Matrix> ground_truth;  // complete raw-scale X, synthetic data only
  std::vector<double> mean;
  std::vector<double> stddev;
  double availability = 1.0;

  std::size_t rows() const noexcept { return raw.rows(); }
  std::size_t features() const noexcept { return raw.cols(); }
  std::size_t classes() const noexcept { return class_names.size(); }
  std::size_t signal_dim() const noexcept { return features() + classes(); }

  std::vector<std::size_t> rows_in(Split s) const;
  void validate() const;

  // Recompute mean/stddev from the training rows' available entries.
  void restandardize();
  Matrix standardize(const Matrix& raw_values) const;
  // Available entries standardized, everything else 0.
  Matrix standardized_features() const;
  Matrix feature_mask() const;  // n x m current availability

  // Z = [standardized X | one-hot labels of training rows].
  Matrix assemble_z() const;
  // n x (m + c) masks: features over available entries, labels over train rows.
  objective::MaskPair masks() const;
  // n x (m + c) one-hot target block / selection mask for rows of one split.
  Matrix label_targets(Split s) const;
  Matrix label_mask(Split s) const;
  // Entries observed at baseline but hidden by availability masking.
  Matrix held_out_mask() const;
  // Standardized meta values, n x I (for baselines).
  Matrix standardized_meta() const;
};

MaskedDataset from_table(const csv::Table& table, const Schema& schema);
MaskedDataset load_csv(const std::filesystem::path& path, const Schema& schema);

// Stratified: floor(10%) test, floor(10%) of the rest validation, remainder
// train. Classes with fewer than 3 rows are pooled into one stratum.
MaskedDataset assign_splits(MaskedDataset dataset, std::uint64_t seed);

// Keep floor(level * N) of the N baseline-observed entries, chosen by a single
// seeded permutation so lower levels are subsets of higher ones.
MaskedDataset apply_availability(MaskedDataset dataset, double level, std::uint64_t seed);

std::vector<graph::PopulationGraph> build_graphs(const MaskedDataset& dataset);

csv::Table to_table(const MaskedDataset& dataset);
Schema schema_for(const MaskedDataset& dataset);
void write_dataset(const MaskedDataset& dataset, const std::filesystem::path& csv_path,
                   const std::filesystem::path& schema_path);
// Standardized-or-raw matrix as CSV with the given header.
std::string matrix_csv(const Matrix& m, const std::vector<std::string>& header);

}  // namespace mgmc::data
