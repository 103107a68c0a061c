#include "mgmc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "mgmc/errors.hpp"
#include "mgmc/params.hpp"
#include "mgmc/logging.hpp"

namespace mgmc::data {

namespace {

bool is_missing_cell(const std::string& s) {
  return s.empty() || s == "NaN" || s == "nan" || s == "NA" || s == "na";
}

std::optional<double> parse_number(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

ColumnRole role_from_string(const std::string& s) {
  if (s == "feature") return ColumnRole::Feature;
  if (s == "meta") return ColumnRole::Meta;
  if (s == "label") return ColumnRole::Label;
  if (s == "ignore") return ColumnRole::Ignore;
  throw SchemaError("unknown column role '" + s + "'");
}

const char* role_to_string(ColumnRole r) {
  switch (r) {
    case ColumnRole::Feature: return "feature";
    case ColumnRole::Meta: return "meta";
    case ColumnRole::Label: return "label";
    case ColumnRole::Ignore: return "ignore";
  }
  return "feature";
}

}  // namespace

const char* to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Schema Schema::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("schema is not valid JSON: ") + e.what());
  }
  Schema s;
  try {
    if (j.contains("default_role")) s.default_role = role_from_string(j.at("default_role"));
    if (j.contains("classes")) s.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& col : j.at("columns")) {
      ColumnSchema c;
      c.name = col.at("name").get<std::string>();
      c.role = role_from_string(col.value("role", std::string("feature")));
      c.threshold = col.value("threshold", 0.0);
      c.categorical = col.value("categorical", false);
      if (c.threshold < 0.0) throw SchemaError("negative threshold for column '" + c.name + "'");
      s.columns.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  std::set<std::string> seen;
  for (const auto& c : s.columns) {
    if (!seen.insert(c.name).second) throw SchemaError("schema lists column '" + c.name + "' twice");
  }
  return s;
}

Schema Schema::load(const std::filesystem::path& path) { return from_json(csv::read_text(path)); }

std::string Schema::to_json() const {
  nlohmann::ordered_json j;
  j["default_role"] = role_to_string(default_role);
  if (!classes.empty()) j["classes"] = classes;
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& c : columns) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["role"] = role_to_string(c.role);
    if (c.role == ColumnRole::Meta) {
      cj["threshold"] = c.threshold;
      cj["categorical"] = c.categorical;
    }
    cols.push_back(cj);
  }
  j["columns"] = cols;
  return j.dump(2);
}

std::vector<std::size_t> MaskedDataset::rows_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

void MaskedDataset::validate() const {
  const std::size_t n = rows();
  if (n == 0 || features() == 0) throw DataError("dataset needs at least one row and one feature");
  if (classes() < 2) throw DataError("dataset needs at least 2 classes, found " + std::to_string(classes()));
  if (!baseline.same_shape(raw) || !available.same_shape(raw)) {
    throw DimensionError("dataset masks do not match feature matrix shape");
  }
  if (labels.size() != n || split.size() != n) throw DimensionError("dataset label/split length mismatch");
  for (std::size_t l : labels)
    if (l >= classes()) throw DataError("label index out of range");
  for (const auto& m : meta)
    if (m.values.size() != n) throw DimensionError("meta feature '" + m.name + "' length mismatch");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (available.data()[i] != 0.0 && baseline.data()[i] == 0.0) {
      throw ContractError("available mask is not a subset of the baseline mask");
    }
  }
}

void MaskedDataset::restandardize() {
  const std::size_t m = features();
  mean.assign(m, 0.0);
  stddev.assign(m, 1.0);
  for (std::size_t c = 0; c < m; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (split[r] == Split::Train && available(r, c) != 0.0) {
        sum += raw(r, c);
        ++count;
      }
    }
    if (count == 0) {
      log::warn("feature '" + feature_names[c] + "' has no visible training entries; using mean 0, std 1");
      continue;
    }
    const double mu = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (split[r] == Split::Train && available(r, c) != 0.0) ss += (raw(r, c) - mu) * (raw(r, c) - mu);
    }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    mean[c] = mu;
    stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
}

Matrix MaskedDataset::standardize(const Matrix& raw_values) const {
  if (raw_values.cols() != features()) throw DimensionError("standardize: column count mismatch");
  Matrix out(raw_values.rows(), raw_values.cols());
  for (std::size_t r = 0; r < raw_values.rows(); ++r)
    for (std::size_t c = 0; c < raw_values.cols(); ++c)
      out(r, c) = (raw_values(r, c) - mean[c]) / stddev[c];
  return out;
}

Matrix MaskedDataset::standardized_features() const {
  Matrix out(rows(), features());
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < features(); ++c)
      if (available(r, c) != 0.0) out(r, c) = (raw(r, c) - mean[c]) / stddev[c];
  return out;
}

Matrix MaskedDataset::feature_mask() const { return available; }

Matrix MaskedDataset::assemble_z() const {
  const std::size_t m = features();
  Matrix z(rows(), signal_dim());
  const Matrix x = standardized_features();
  z.dense().leftCols(static_cast<Eigen::Index>(m)) = x.dense();
  for (std::size_t r = 0; r < rows(); ++r)
    if (split[r] == Split::Train) z(r, m + labels[r]) = 1.0;
  return z;
}

Matrix MaskedDataset::label_targets(Split s) const {
  Matrix t(rows(), signal_dim());
  for (std::size_t r = 0; r < rows(); ++r)
    if (split[r] == s) t(r, features() + labels[r]) = 1.0;
  return t;
}

Matrix MaskedDataset::label_mask(Split s) const {
  Matrix mask(rows(), signal_dim());
  for (std::size_t r = 0; r < rows(); ++r)
    if (split[r] == s)
      for (std::size_t k = 0; k < classes(); ++k) mask(r, features() + k) = 1.0;
  return mask;
}

objective::MaskPair MaskedDataset::masks() const {
  objective::MaskPair pair;
  pair.features = Matrix(rows(), signal_dim());
  pair.features.dense().leftCols(static_cast<Eigen::Index>(features())) = available.dense();
  pair.labels = label_mask(Split::Train);
  return pair;
}

Matrix MaskedDataset::held_out_mask() const {
  Matrix h(rows(), features());
  for (std::size_t i = 0; i < h.size(); ++i)
    h.data()[i] = (baseline.data()[i] != 0.0 && available.data()[i] == 0.0) ? 1.0 : 0.0;
  return h;
}

Matrix MaskedDataset::standardized_meta() const {
  Matrix out(rows(), meta.size());
  for (std::size_t j = 0; j < meta.size(); ++j) {
    double sum = 0.0, ss = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (split[r] == Split::Train && meta[j].values[r]) {
        sum += *meta[j].values[r];
        ++count;
      }
    }
    const double mu = count ? sum / static_cast<double>(count) : 0.0;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (split[r] == Split::Train && meta[j].values[r]) ss += std::pow(*meta[j].values[r] - mu, 2);
    }
    double sd = count ? std::sqrt(ss / static_cast<double>(count)) : 1.0;
    if (sd <= 1e-12) sd = 1.0;
    for (std::size_t r = 0; r < rows(); ++r) {
      out(r, j) = meta[j].values[r] ? (*meta[j].values[r] - mu) / sd : 0.0;
    }
  }
  return out;
}

MaskedDataset from_table(const csv::Table& table, const Schema& schema) {
  const auto& header = table.header;
  {
    std::set<std::string> seen;
    for (const auto& h : header)
      if (!seen.insert(h).second) throw SchemaError("duplicate header name '" + h + "'");
  }
  std::map<std::string, const ColumnSchema*> declared;
  for (const auto& c : schema.columns) declared[c.name] = &c;
  for (const auto& c : schema.columns) {
    if (std::find(header.begin(), header.end(), c.name) == header.end()) {
      throw SchemaError("schema column '" + c.name + "' not found in CSV header");
    }
  }

  std::vector<std::size_t> feature_cols, meta_cols;
  std::vector<const ColumnSchema*> meta_schema;
  std::optional<std::size_t> label_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto it = declared.find(header[i]);
    const ColumnRole role = it == declared.end() ? schema.default_role : it->second->role;
    switch (role) {
      case ColumnRole::Feature: feature_cols.push_back(i); break;
      case ColumnRole::Meta:
        meta_cols.push_back(i);
        meta_schema.push_back(it->second);
        break;
      case ColumnRole::Label:
        if (label_col) throw SchemaError("schema declares more than one label column");
        label_col = i;
        break;
      case ColumnRole::Ignore: break;
    }
  }
  if (!label_col) throw SchemaError("schema declares no label column");
  if (feature_cols.empty()) throw SchemaError("schema declares no feature columns");

  const std::size_t n = table.rows.size();
  const std::size_t m = feature_cols.size();
  MaskedDataset ds;
  for (std::size_t c : feature_cols) ds.feature_names.push_back(header[c]);
  ds.raw = Matrix(n, m);
  ds.baseline = Matrix(n, m);

  std::map<std::string, std::size_t> class_index;
  for (std::size_t k = 0; k < schema.classes.size(); ++k) {
    class_index[schema.classes[k]] = k;
    ds.class_names.push_back(schema.classes[k]);
  }
  const bool closed_classes = !schema.classes.empty();

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const std::string where = "data row " + std::to_string(r + 1);
    for (std::size_t j = 0; j < m; ++j) {
      const std::string& cell = row[feature_cols[j]];
      if (is_missing_cell(cell)) continue;
      auto v = parse_number(cell);
      if (!v) {
        throw DataError(where + ", column '" + header[feature_cols[j]] + "': non-numeric value '" +
                        cell + "'");
      }
      ds.raw(r, j) = *v;
      ds.baseline(r, j) = 1.0;
    }
    const std::string& lab = row[*label_col];
    if (is_missing_cell(lab)) throw DataError(where + ": missing label");
    auto it = class_index.find(lab);
    if (it == class_index.end()) {
      if (closed_classes) throw DataError(where + ": unknown label '" + lab + "'");
      it = class_index.emplace(lab, ds.class_names.size()).first;
      ds.class_names.push_back(lab);
    }
    ds.labels.push_back(it->second);
  }

  for (std::size_t k = 0; k < meta_cols.size(); ++k) {
    const std::size_t col = meta_cols[k];
    graph::MetaFeature mf;
    mf.name = header[col];
    mf.threshold = meta_schema[k]->threshold;
    mf.categorical = meta_schema[k]->categorical;
    bool numeric = true;
    for (const auto& row : table.rows) {
      if (!is_missing_cell(row[col]) && !parse_number(row[col])) numeric = false;
    }
    if (!numeric && !mf.categorical) {
      throw DataError("meta column '" + mf.name + "' is non-numeric but not declared categorical");
    }
    std::map<std::string, double> codes;
    for (const auto& row : table.rows) {
      const std::string& cell = row[col];
      if (is_missing_cell(cell)) {
        mf.values.push_back(std::nullopt);
      } else if (numeric) {
        mf.values.push_back(parse_number(cell));
      } else {
        auto [it, inserted] = codes.emplace(cell, static_cast<double>(codes.size()));
        mf.values.push_back(it->second);
      }
    }
    ds.meta.push_back(std::move(mf));
  }

  ds.available = ds.baseline;
  ds.split.assign(n, Split::Train);
  ds.validate();
  ds.restandardize();
  return ds;
}

MaskedDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  return from_table(csv::read_file(path), schema);
}

MaskedDataset assign_splits(MaskedDataset ds, std::uint64_t seed) {
  const std::size_t n = ds.rows();
  if (n < 10) throw ContractError("assign_splits: need at least 10 rows, got " + std::to_string(n));
  const std::size_t n_test = n / 10;
  const std::size_t n_val = (n - n_test) / 10;

  std::vector<std::vector<std::size_t>> by_class(ds.classes());
  for (std::size_t r = 0; r < n; ++r) by_class[ds.labels[r]].push_back(r);
  std::vector<std::vector<std::size_t>> strata;
  std::vector<std::size_t> pooled;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].empty()) continue;
    if (by_class[k].size() < 3) {
      log::warn("class '" + ds.class_names[k] + "' has fewer than 3 rows; split unstratified");
      pooled.insert(pooled.end(), by_class[k].begin(), by_class[k].end());
    } else {
      strata.push_back(by_class[k]);
    }
  }
  if (!pooled.empty()) strata.push_back(std::move(pooled));

  Rng rng(seed);
  for (auto& s : strata) std::shuffle(s.begin(), s.end(), rng);

  // Largest-remainder allocation of `total` over strata proportional to `sizes`.
  auto allocate = [](std::size_t total, const std::vector<std::size_t>& sizes) {
    const std::size_t sum = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    std::vector<std::size_t> out(sizes.size(), 0);
    if (sum == 0) return out;
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double exact = static_cast<double>(total) * static_cast<double>(sizes[i]) /
                           static_cast<double>(sum);
      out[i] = static_cast<std::size_t>(std::floor(exact));
      used += out[i];
      rem.emplace_back(exact - static_cast<double>(out[i]), i);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < total && k < rem.size(); ++k) {
      if (out[rem[k].second] < sizes[rem[k].second]) {
        ++out[rem[k].second];
        ++used;
      }
    }
    return out;
  };

  std::vector<std::size_t> sizes;
  for (const auto& s : strata) sizes.push_back(s.size());
  const auto test_counts = allocate(n_test, sizes);
  std::vector<std::size_t> remaining;
  for (std::size_t i = 0; i < sizes.size(); ++i) remaining.push_back(sizes[i] - test_counts[i]);
  const auto val_counts = allocate(n_val, remaining);

  ds.split.assign(n, Split::Train);
  for (std::size_t i = 0; i < strata.size(); ++i) {
    for (std::size_t j = 0; j < strata[i].size(); ++j) {
      if (j < test_counts[i]) ds.split[strata[i][j]] = Split::Test;
      else if (j < test_counts[i] + val_counts[i]) ds.split[strata[i][j]] = Split::Val;
    }
  }
  ds.restandardize();
  return ds;
}

MaskedDataset apply_availability(MaskedDataset ds, double level, std::uint64_t seed) {
  if (!(level > 0.0 && level <= 1.0)) {
    throw ConfigError("availability level must be in (0, 1], got " + std::to_string(level));
  }
  std::vector<std::size_t> observed;
  const auto base = ds.baseline.data();
  for (std::size_t i = 0; i < base.size(); ++i)
    if (base[i] != 0.0) observed.push_back(i);
  Rng rng(seed);
  std::shuffle(observed.begin(), observed.end(), rng);
  const auto keep = static_cast<std::size_t>(
      std::floor(level * static_cast<double>(observed.size()) + 1e-9));
  ds.available = Matrix::zeros(ds.rows(), ds.features());
  auto avail = ds.available.data();
  for (std::size_t k = 0; k < keep && k < observed.size(); ++k) avail[observed[k]] = 1.0;
  ds.availability = level;

  std::size_t empty_rows = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    bool any = false;
    for (std::size_t c = 0; c < ds.features() && !any; ++c) any = ds.available(r, c) != 0.0;
    if (!any) ++empty_rows;
  }
  if (empty_rows > 0) {
    log::warn(std::to_string(empty_rows) + " rows have no observed features at availability " +
              std::to_string(level));
  }
  ds.restandardize();
  return ds;
}

std::vector<graph::PopulationGraph> build_graphs(const MaskedDataset& ds) {
  std::vector<graph::PopulationGraph> graphs;
  for (const auto& m : ds.meta) graphs.push_back(graph::build_graph(m));
  return graphs;
}

csv::Table to_table(const MaskedDataset& ds) {
  csv::Table t;
  for (const auto& m : ds.meta) t.header.push_back(m.name);
  for (const auto& f : ds.feature_names) t.header.push_back(f);
  t.header.push_back("label");
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    std::vector<std::string> row;
    for (const auto& m : ds.meta) row.push_back(m.values[r] ? csv::format_double(*m.values[r]) : "");
    for (std::size_t c = 0; c < ds.features(); ++c) {
      row.push_back(ds.available(r, c) != 0.0 ? csv::format_double(ds.raw(r, c)) : "");
    }
    row.push_back(ds.class_names[ds.labels[r]]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Schema schema_for(const MaskedDataset& ds) {
  Schema s;
  for (const auto& m : ds.meta) {
    ColumnSchema c;
    c.name = m.name;
    c.role = ColumnRole::Meta;
    c.threshold = m.threshold;
    c.categorical = m.categorical;
    s.columns.push_back(c);
  }
  ColumnSchema label;
  label.name = "label";
  label.role = ColumnRole::Label;
  s.columns.push_back(label);
  s.classes = ds.class_names;
  return s;
}

void write_dataset(const MaskedDataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& schema_path) {
  const csv::Table t = to_table(ds);
  std::string out = csv::join(t.header) + "\n";
  for (const auto& row : t.rows) out += csv::join(row) + "\n";
  csv::write_file(csv_path, out);
  csv::write_file(schema_path, schema_for(ds).to_json() + "\n");
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& header) {
  if (!header.empty() && header.size() != m.cols()) {
    throw DimensionError("matrix_csv: header has " + std::to_string(header.size()) + " names for " +
                         std::to_string(m.cols()) + " columns");
  }
  std::string out;
  if (!header.empty()) out += csv::join(header) + "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out.push_back(',');
      out += csv::format_double(m(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace mgmc::data
