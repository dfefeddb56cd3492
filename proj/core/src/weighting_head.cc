#include "stacksum/weighting_head.h"

#include <cmath>
#include <numbers>

namespace stacksum {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluCoeff = 0.044715;
const double kGeluScale = std::sqrt(2.0 / std::numbers::pi);

void layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, Matrix& xhat,
                RowVector& rstd, Matrix& out) {
  const auto n = x.rows();
  const auto d = static_cast<double>(x.cols());
  xhat.resize(n, x.cols());
  rstd.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = x.row(r).sum() / d;
    const RowVector centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / d;
    rstd[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = centered * rstd[r];
  }
  out = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
}

Matrix layer_norm_backward(const Matrix& d_out, const Matrix& xhat, const RowVector& rstd,
                           const Matrix& gamma, Matrix& d_gamma, Matrix& d_beta) {
  d_gamma.row(0) += (d_out.array() * xhat.array()).colwise().sum().matrix();
  d_beta.row(0) += d_out.colwise().sum();
  const Matrix d_xhat = d_out.array().rowwise() * gamma.row(0).array();
  const auto d = static_cast<double>(xhat.cols());
  Matrix dx(xhat.rows(), xhat.cols());
  for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
    const double sum_dxhat = d_xhat.row(r).sum();
    const double dot = d_xhat.row(r).dot(xhat.row(r));
    dx.row(r) = (rstd[r] / d) *
                (d * d_xhat.row(r).array() - sum_dxhat - xhat.row(r).array() * dot).matrix();
  }
  return dx;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCoeff * x * x * x)));
}

double gelu_derivative(double x) {
  const double t = std::tanh(kGeluScale * (x + kGeluCoeff * x * x * x));
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCoeff * x * x);
}

HeadCache head_forward(const ScorerParams& params, const Matrix& x) {
  const auto d = static_cast<Eigen::Index>(params.dim);
  const auto heads = static_cast<Eigen::Index>(params.num_heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  HeadCache cache;
  Matrix h = x;
  for (const auto& b : params.blocks) {
    BlockCache c;
    c.input = h;
    layer_norm(h, b.ln1_gamma, b.ln1_beta, c.ln1_xhat, c.ln1_rstd, c.ln1_out);
    c.q = affine(c.ln1_out, b.wq, b.bq);
    c.k = affine(c.ln1_out, b.wk, b.bk);
    c.v = affine(c.ln1_out, b.wv, b.bv);
    c.context.resize(h.rows(), d);
    for (Eigen::Index head = 0; head < heads; ++head) {
      const auto cols = Eigen::seqN(head * dh, dh);
      Matrix scores = c.q(Eigen::all, cols) * c.k(Eigen::all, cols).transpose() * scale;
      softmax_rows(scores);
      c.context(Eigen::all, cols) = scores * c.v(Eigen::all, cols);
      c.attention.push_back(std::move(scores));
    }
    c.mid = h + affine(c.context, b.wo, b.bo);
    layer_norm(c.mid, b.ln2_gamma, b.ln2_beta, c.ln2_xhat, c.ln2_rstd, c.ln2_out);
    c.ff_pre = affine(c.ln2_out, b.w1, b.b1);
    c.ff_act = c.ff_pre.unaryExpr([](double v) { return gelu(v); });
    h = c.mid + affine(c.ff_act, b.w2, b.b2);
    cache.blocks.push_back(std::move(c));
  }
  cache.output = std::move(h);
  return cache;
}

Matrix head_backward(const ScorerParams& params, const HeadCache& cache, const Matrix& d_output,
                     ScorerParams& grads) {
  const auto d = static_cast<Eigen::Index>(params.dim);
  const auto heads = static_cast<Eigen::Index>(params.num_heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dh_out = d_output;
  for (std::size_t li = params.blocks.size(); li-- > 0;) {
    const auto& b = params.blocks[li];
    auto& g = grads.blocks[li];
    const auto& c = cache.blocks[li];

    // out = mid + ff_act·W2 + b2
    Matrix d_mid = dh_out;
    g.w2 += c.ff_act.transpose() * dh_out;
    g.b2.row(0) += dh_out.colwise().sum();
    Matrix d_act = dh_out * b.w2.transpose();
    Matrix d_pre = d_act.array() * c.ff_pre.unaryExpr([](double v) { return gelu_derivative(v); }).array();
    g.w1 += c.ln2_out.transpose() * d_pre;
    g.b1.row(0) += d_pre.colwise().sum();
    Matrix d_ln2 = d_pre * b.w1.transpose();
    d_mid += layer_norm_backward(d_ln2, c.ln2_xhat, c.ln2_rstd, b.ln2_gamma, g.ln2_gamma, g.ln2_beta);

    // mid = input + context·Wo + bo
    Matrix d_input = d_mid;
    g.wo += c.context.transpose() * d_mid;
    g.bo.row(0) += d_mid.colwise().sum();
    const Matrix d_context = d_mid * b.wo.transpose();

    Matrix dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
    for (Eigen::Index head = 0; head < heads; ++head) {
      const auto cols = Eigen::seqN(head * dh, dh);
      const Matrix& a = c.attention[static_cast<std::size_t>(head)];
      const Matrix d_ctx = d_context(Eigen::all, cols);
      dv(Eigen::all, cols) = a.transpose() * d_ctx;
      const Matrix da = d_ctx * c.v(Eigen::all, cols).transpose();
      Matrix ds = a.array() * (da.colwise() - (da.array() * a.array()).rowwise().sum().matrix()).array();
      ds *= scale;
      dq(Eigen::all, cols) = ds * c.k(Eigen::all, cols);
      dk(Eigen::all, cols) = ds.transpose() * c.q(Eigen::all, cols);
    }
    g.wq += c.ln1_out.transpose() * dq;
    g.bq.row(0) += dq.colwise().sum();
    g.wk += c.ln1_out.transpose() * dk;
    g.bk.row(0) += dk.colwise().sum();
    g.wv += c.ln1_out.transpose() * dv;
    g.bv.row(0) += dv.colwise().sum();
    const Matrix d_ln1 = dq * b.wq.transpose() + dk * b.wk.transpose() + dv * b.wv.transpose();
    d_input += layer_norm_backward(d_ln1, c.ln1_xhat, c.ln1_rstd, b.ln1_gamma, g.ln1_gamma, g.ln1_beta);
    dh_out = std::move(d_input);
  }
  return dh_out;
}

}  // namespace stacksum
