#include "stacksum/params.h"

#include <cmath>

#include "stacksum/error.h"

namespace stacksum {
namespace {

Matrix xavier(std::size_t rows, std::size_t cols, std::uint64_t& state) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * standard_normal(state);
  return m;
}

Matrix constant(std::size_t cols, double value) { return Matrix::Constant(1, cols, value); }

void check_shape(const std::string& name, const Matrix& m, std::size_t rows, std::size_t cols) {
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    throw Error("parameter " + name + " has shape " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                std::to_string(cols));
  }
}

}  // namespace

ScorerParams ScorerParams::initialize(const HeadConfig& config, std::uint64_t seed) {
  if (config.dim == 0) throw Error("dimension must be positive");
  if (config.num_heads == 0 || config.dim % config.num_heads != 0) {
    throw Error("head count " + std::to_string(config.num_heads) + " does not divide dimension " +
                std::to_string(config.dim));
  }
  if (config.num_layers == 0) throw Error("weighting head needs at least one layer");
  const std::size_t d = config.dim;
  const std::size_t ff = config.ff_multiplier * d;
  if (ff == 0) throw Error("feed-forward width must be positive");

  std::uint64_t state = seed;
  ScorerParams p;
  p.dim = d;
  p.num_heads = config.num_heads;
  p.ff_dim = ff;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    BlockParams b;
    b.ln1_gamma = constant(d, 1.0);
    b.ln1_beta = constant(d, 0.0);
    b.wq = xavier(d, d, state);
    b.bq = constant(d, 0.0);
    b.wk = xavier(d, d, state);
    b.bk = constant(d, 0.0);
    b.wv = xavier(d, d, state);
    b.bv = constant(d, 0.0);
    b.wo = xavier(d, d, state);
    b.bo = constant(d, 0.0);
    b.ln2_gamma = constant(d, 1.0);
    b.ln2_beta = constant(d, 0.0);
    b.w1 = xavier(d, ff, state);
    b.b1 = constant(ff, 0.0);
    b.w2 = xavier(ff, d, state);
    b.b2 = constant(d, 0.0);
    p.blocks.push_back(std::move(b));
  }
  p.global_slot.resize(1, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i) p.global_slot(0, i) = scale * standard_normal(state);
  if (config.use_projection) p.projection = Matrix::Identity(d, d);
  return p;
}

ScorerParams ScorerParams::zeros_like() const {
  ScorerParams z = *this;
  for (auto& [_, m] : z.tensors()) m->setZero();
  return z;
}

HeadConfig ScorerParams::config() const {
  HeadConfig c;
  c.dim = dim;
  c.num_heads = num_heads;
  c.num_layers = blocks.size();
  c.ff_multiplier = dim ? ff_dim / dim : 0;
  c.use_projection = projection.has_value();
  return c;
}

std::vector<ScorerParams::NamedTensor> ScorerParams::tensors() {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    auto& b = blocks[l];
    const std::string p = "block" + std::to_string(l) + ".";
    out.emplace_back(p + "ln1_gamma", &b.ln1_gamma);
    out.emplace_back(p + "ln1_beta", &b.ln1_beta);
    out.emplace_back(p + "wq", &b.wq);
    out.emplace_back(p + "bq", &b.bq);
    out.emplace_back(p + "wk", &b.wk);
    out.emplace_back(p + "bk", &b.bk);
    out.emplace_back(p + "wv", &b.wv);
    out.emplace_back(p + "bv", &b.bv);
    out.emplace_back(p + "wo", &b.wo);
    out.emplace_back(p + "bo", &b.bo);
    out.emplace_back(p + "ln2_gamma", &b.ln2_gamma);
    out.emplace_back(p + "ln2_beta", &b.ln2_beta);
    out.emplace_back(p + "w1", &b.w1);
    out.emplace_back(p + "b1", &b.b1);
    out.emplace_back(p + "w2", &b.w2);
    out.emplace_back(p + "b2", &b.b2);
  }
  out.emplace_back("global_slot", &global_slot);
  if (projection) out.emplace_back("projection", &*projection);
  return out;
}

std::vector<ScorerParams::ConstNamedTensor> ScorerParams::tensors() const {
  std::vector<ConstNamedTensor> out;
  for (auto& [name, m] : const_cast<ScorerParams*>(this)->tensors()) out.emplace_back(name, m);
  return out;
}

std::size_t ScorerParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : tensors()) n += static_cast<std::size_t>(m->size());
  return n;
}

void ScorerParams::validate() const {
  if (version != kFormatVersion) {
    throw Error("unsupported parameter version " + std::to_string(version));
  }
  if (dim == 0 || num_heads == 0 || dim % num_heads != 0) {
    throw Error("inconsistent dimension/head count");
  }
  if (blocks.empty()) throw Error("weighting head has no layers");
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const auto& b = blocks[l];
    const std::string p = "block" + std::to_string(l) + ".";
    for (auto [name, m] : {std::pair{"ln1_gamma", &b.ln1_gamma}, {"ln1_beta", &b.ln1_beta},
                           {"bq", &b.bq}, {"bk", &b.bk}, {"bv", &b.bv}, {"bo", &b.bo},
                           {"ln2_gamma", &b.ln2_gamma}, {"ln2_beta", &b.ln2_beta},
                           {"b2", &b.b2}}) {
      check_shape(p + name, *m, 1, dim);
    }
    for (auto [name, m] : {std::pair{"wq", &b.wq}, {"wk", &b.wk}, {"wv", &b.wv}, {"wo", &b.wo}}) {
      check_shape(p + name, *m, dim, dim);
    }
    check_shape(p + "w1", b.w1, dim, ff_dim);
    check_shape(p + "b1", b.b1, 1, ff_dim);
    check_shape(p + "w2", b.w2, ff_dim, dim);
  }
  check_shape("global_slot", global_slot, 1, dim);
  if (projection) check_shape("projection", *projection, dim, dim);
  for (const auto& [name, m] : tensors()) {
    if (!m->allFinite()) throw Error("parameter " + name + " is not finite");
  }
}

bool operator==(const ScorerParams& a, const ScorerParams& b) {
  if (a.dim != b.dim || a.num_heads != b.num_heads || a.ff_dim != b.ff_dim ||
      a.version != b.version || a.blocks.size() != b.blocks.size() ||
      a.projection.has_value() != b.projection.has_value()) {
    return false;
  }
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].second->rows() != tb[i].second->rows() ||
        ta[i].second->cols() != tb[i].second->cols() || *ta[i].second != *tb[i].second) {
      return false;
    }
  }
  return true;
}

}  // namespace stacksum
