#include "mgmc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mgmc/errors.hpp"
#include "mgmc/params.hpp"

namespace mgmc::data {

void SyntheticSpec::validate() const {
  if (rows == 0 || features == 0) throw ConfigError("synthetic: rows and features must be positive");
  if (classes < 2) throw ConfigError("synthetic: need at least 2 classes");
  if (rank == 0 || rank > std::min(rows, features)) {
    throw ConfigError("synthetic: rank must be in [1, min(rows, features)]");
  }
  if (!(noise >= 0.0)) throw ConfigError("synthetic: noise must be non-negative");
  if (!(meta_fidelity >= 0.0 && meta_fidelity <= 1.0)) {
    throw ConfigError("synthetic: meta fidelity must be in [0, 1]");
  }
  if (!(separation >= 0.0)) throw ConfigError("synthetic: separation must be non-negative");
}

MaskedDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t n = spec.rows, m = spec.features, c = spec.classes, r = spec.rank;
  std::vector<std::size_t> cluster(n);
  for (std::size_t i = 0; i < n; ++i) cluster[i] = i % c;
  std::shuffle(cluster.begin(), cluster.end(), rng);

  // Shared loadings; cluster k's latent rows are centred on offset mu_k.
  DenseRowMajor basis(m, r);
  for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = normal(rng);
  const double pi = std::acos(-1.0);
  std::vector<Eigen::RowVectorXd> offsets;
  for (std::size_t k = 0; k < c; ++k) {
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(r));
    if (r == 1) {
      mu(0) = spec.separation * (static_cast<double>(k) - 0.5 * static_cast<double>(c - 1));
    } else {
      const double angle = 2.0 * pi * static_cast<double>(k) / static_cast<double>(c);
      mu(0) = spec.separation * std::cos(angle);
      mu(1) = spec.separation * std::sin(angle);
    }
    offsets.push_back(std::move(mu));
  }

  DenseRowMajor x(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::RowVectorXd u = offsets[cluster[i]];
    for (std::size_t j = 0; j < r; ++j) u(j) += normal(rng);
    x.row(i) = u * basis.transpose();
    for (std::size_t j = 0; j < m; ++j) x(i, j) += spec.noise * normal(rng);
  }

  MaskedDataset ds;
  for (std::size_t j = 0; j < m; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t k = 0; k < c; ++k) ds.class_names.push_back("c" + std::to_string(k));
  ds.raw = Matrix(std::move(x));
  ds.baseline = Matrix::ones(n, m);
  ds.available = ds.baseline;
  ds.labels = cluster;
  ds.ground_truth = ds.raw;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> other(1, c - 1);
  for (std::size_t g = 0; g < spec.meta_features; ++g) {
    graph::MetaFeature mf;
    mf.name = "meta" + std::to_string(g);
    mf.categorical = true;
    mf.threshold = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t value = cluster[i];
      if (unif(rng) >= spec.meta_fidelity) value = (cluster[i] + other(rng)) % c;
      mf.values.push_back(static_cast<double>(value));
    }
    ds.meta.push_back(std::move(mf));
  }
  ds.split.assign(n, Split::Train);
  ds.validate();
  ds.restandardize();
  return ds;
}

void write_synthetic(const MaskedDataset& ds, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_dataset(ds, out_dir / "dataset.csv", out_dir / "schema.json");
  if (ds.ground_truth) {
    csv::write_file(out_dir / "ground_truth.csv", matrix_csv(*ds.ground_truth, ds.feature_names));
  }
}

}  // namespace mgmc::data
