#include "mgmc/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mgmc/csv.hpp"
#include "mgmc/errors.hpp"

namespace mgmc {

namespace {

constexpr char kMagic[] = "MGMC1";
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(std::size_t len) {
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > bytes_.size()) throw DataError("model container is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void ModelConfig::validate() const {
  if (features == 0 || classes == 0) throw ConfigError("model: features and classes must be positive");
  if (graphs == 0) throw ConfigError("model: at least one graph is required");
  if (cheb_order < 0) throw ConfigError("model: Chebyshev order must be >= 0");
  if (hidden == 0 || attention_dim == 0) throw ConfigError("model: widths must be positive");
  if (steps == 0) throw ConfigError("model: unroll steps must be >= 1");
}

std::string to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["features"] = c.features;
  j["classes"] = c.classes;
  j["graphs"] = c.graphs;
  j["cheb_order"] = c.cheb_order;
  j["hidden"] = c.hidden;
  j["steps"] = c.steps;
  j["autoregressive"] = c.autoregressive;
  j["cheb_bias"] = c.cheb_bias;
  j["attention"] = fusion::to_string(c.attention);
  j["attention_dim"] = c.attention_dim;
  j["attention_reads_labels"] = c.attention_reads_labels;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c;
    c.features = j.at("features");
    c.classes = j.at("classes");
    c.graphs = j.at("graphs");
    c.cheb_order = j.at("cheb_order");
    c.hidden = j.at("hidden");
    c.steps = j.at("steps");
    c.autoregressive = j.at("autoregressive");
    c.cheb_bias = j.at("cheb_bias");
    c.attention = fusion::attention_mode_from_string(j.at("attention"));
    c.attention_dim = j.at("attention_dim");
    c.attention_reads_labels = j.at("attention_reads_labels");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model config: ") + e.what());
  }
}

MgmcModel MgmcModel::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  MgmcModel model;
  model.config_ = config;
  Rng rng(seed);
  for (std::size_t i = 0; i < config.graphs; ++i) {
    model.branches_.push_back(recurrent::make_branch(model.params_, "branch" + std::to_string(i),
                                                     config.cheb_order, config.signal_dim(),
                                                     config.hidden, config.cheb_bias, rng));
  }
  model.head_ = fusion::make_fusion_head(model.params_, config.signal_dim(), config.attention_dim,
                                         config.attention, rng,
                                         config.attention_reads_labels ? 0 : config.features);
  return model;
}

MgmcModel::Forward MgmcModel::forward(ad::Tape& tape, const BoundParams& params,
                                      std::span<const Matrix* const> rescaled, ad::Var z,
                                      recurrent::BranchTrace* trace) const {
  if (rescaled.size() != branches_.size()) {
    throw ContractError("MgmcModel::forward: " + std::to_string(rescaled.size()) +
                        " graphs for " + std::to_string(branches_.size()) + " branches");
  }
  recurrent::BranchOptions opts;
  opts.steps = config_.steps;
  opts.autoregressive = config_.autoregressive;
  Forward out;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    ad::Var lt = tape.constant(*rescaled[i]);
    out.branch_outputs.push_back(
        recurrent::branch_forward(branches_[i], params, lt, z, opts, i == 0 ? trace : nullptr));
  }
  // Training rows carry their labels in z, other rows do not. Scoring a
  // second pass over the features alone gives every row the same kind of
  // input, so branch weights cannot key on a row's own given label.
  std::vector<ad::Var> score_inputs;
  if (!config_.attention_reads_labels && branches_.size() > 1) {
    Matrix keep(z.value().rows(), z.value().cols());
    for (std::size_t r = 0; r < keep.rows(); ++r)
      for (std::size_t c = 0; c < config_.features; ++c) keep(r, c) = 1.0;
    ad::Var features_only = ad::mul(z, tape.constant(keep));
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      score_inputs.push_back(
          recurrent::branch_forward(branches_[i], params, tape.constant(*rescaled[i]), features_only, opts));
    }
  }
  auto fused = fusion::fuse(head_, params, out.branch_outputs, score_inputs);
  out.fused = fused.fused;
  out.attention = fused.weights;
  return out;
}

MgmcModel::Prediction MgmcModel::predict(const Matrix& z,
                                         std::span<const graph::PopulationGraph> graphs) const {
  std::vector<const Matrix*> rescaled;
  for (const auto& g : graphs) rescaled.push_back(&g.rescaled);
  ad::Tape tape;
  const BoundParams bound = bind(tape, params_);
  const Forward f = forward(tape, bound, rescaled, tape.constant(z));
  Prediction p;
  p.fused = f.fused.value();
  p.attention = f.attention.value();
  for (const auto& b : f.branch_outputs) p.branches.push_back(b.value());
  const auto m = static_cast<Eigen::Index>(config_.features);
  const auto c = static_cast<Eigen::Index>(config_.classes);
  p.class_probabilities = ad::rowwise_softmax(Matrix(DenseRowMajor(p.fused.dense().middleCols(m, c))));
  return p;
}

std::string MgmcModel::serialize() const {
  std::string out(kMagic, sizeof(kMagic) - 1);
  put<std::uint32_t>(out, kFormatVersion);
  const std::string cfg = to_json(config_);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& name = params_.names()[i];
    const auto& value = params_.values()[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, value.rows());
    put<std::uint64_t>(out, value.cols());
    for (double v : value.data()) put<double>(out, v);
  }
  return out;
}

MgmcModel MgmcModel::deserialize(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_string(sizeof(kMagic) - 1) != kMagic) throw DataError("not an MGMC1 model container");
  const auto version = in.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw DataError("unsupported model container version " + std::to_string(version));
  }
  const auto cfg_len = in.get<std::uint32_t>();
  MgmcModel model = create(model_config_from_json(in.get_string(cfg_len)), 0);
  const auto count = in.get<std::uint32_t>();
  if (count != model.params_.size()) {
    throw DataError("model container holds " + std::to_string(count) + " parameters, config implies " +
                    std::to_string(model.params_.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = in.get_string(in.get<std::uint32_t>());
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    Matrix& target = model.params_.value(model.params_.find(name));
    if (target.rows() != rows || target.cols() != cols) {
      throw DataError("parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ", expected " + target.shape_string());
    }
    std::vector<double> data(rows * cols);
    for (double& v : data) v = in.get<double>();
    target = Matrix(rows, cols, std::move(data));
  }
  if (!in.done()) throw DataError("trailing bytes after model container");
  return model;
}

void MgmcModel::save(const std::filesystem::path& path) const { csv::write_file(path, serialize()); }

MgmcModel MgmcModel::load(const std::filesystem::path& path) { return deserialize(csv::read_text(path)); }

}  // namespace mgmc
