#include "emal/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace emal {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::array<std::span<double>, 6> parameter_groups(MlpModel& m) {
  return {std::span<double>(m.w1), std::span<double>(m.b1), std::span<double>(m.gamma),
          std::span<double>(m.beta), std::span<double>(m.w2), std::span<double>(&m.b2, 1)};
}

std::array<std::span<double>, 6> MlpGradients::groups() {
  return {std::span<double>(w1), std::span<double>(b1), std::span<double>(gamma),
          std::span<double>(beta), std::span<double>(w2), std::span<double>(&b2, 1)};
}

MlpModel init_mlp(std::size_t dim, std::size_t hidden, Rng& rng) {
  if (hidden < 1) throw ValidationError("MLP hidden width must be >= 1");
  if (dim < 1) throw ValidationError("MLP input dimension must be >= 1");
  MlpModel m;
  m.dim = dim;
  m.hidden = hidden;
  m.w1.resize(hidden * dim);
  const double s1 = std::sqrt(2.0 / static_cast<double>(dim));
  for (double& w : m.w1) w = rng.normal(0.0, s1);
  m.b1.assign(hidden, 0.0);
  m.gamma.assign(hidden, 1.0);
  m.beta.assign(hidden, 0.0);
  m.running_mean.assign(hidden, 0.0);
  m.running_var.assign(hidden, 1.0);
  m.w2.resize(hidden);
  const double s2 = std::sqrt(1.0 / static_cast<double>(hidden));
  for (double& w : m.w2) w = rng.normal(0.0, s2);
  return m;
}

namespace {

void zero(MlpGradients& g, const MlpModel& m) {
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(m.hidden, 0.0);
  g.gamma.assign(m.hidden, 0.0);
  g.beta.assign(m.hidden, 0.0);
  g.w2.assign(m.hidden, 0.0);
  g.b2 = 0.0;
}

void check_dim(const MlpModel& m, std::size_t got) {
  if (got != m.dim) {
    throw ValidationError("MLP expects dimension " + std::to_string(m.dim) + ", got " + std::to_string(got));
  }
}

// Per-batch forward state kept for the backward pass.
struct Forward {
  std::size_t n = 0, h = 0;
  std::vector<double> z1, xhat, out, mean, inv_std;
  std::vector<double> prob;
};

Forward forward(const MlpModel& m, const TrainingSet& ex, std::span<const std::size_t> rows, NormMode mode,
                const std::vector<std::uint8_t>* keep, double dropout) {
  Forward f;
  f.n = rows.size();
  f.h = m.hidden;
  const std::size_t n = f.n, h = f.h;
  f.z1.resize(n * h);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ex.row(rows[i]);
    for (std::size_t u = 0; u < h; ++u) {
      const double* w = m.w1.data() + u * m.dim;
      f.z1[i * h + u] = std::inner_product(x.begin(), x.end(), w, m.b1[u]);
    }
  }
  f.mean.assign(h, 0.0);
  f.inv_std.assign(h, 0.0);
  if (mode == NormMode::batch_statistics) {
    std::vector<double> var(h, 0.0);
    for (std::size_t u = 0; u < h; ++u) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += std::max(0.0, f.z1[i * h + u]);
      f.mean[u] = s / static_cast<double>(n);
      double v = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::max(0.0, f.z1[i * h + u]) - f.mean[u];
        v += d * d;
      }
      var[u] = v / static_cast<double>(n);
      f.inv_std[u] = 1.0 / std::sqrt(var[u] + m.bn_epsilon);
    }
  } else {
    for (std::size_t u = 0; u < h; ++u) {
      f.mean[u] = m.running_mean[u];
      f.inv_std[u] = 1.0 / std::sqrt(m.running_var[u] + m.bn_epsilon);
    }
  }
  const double scale = keep ? 1.0 / (1.0 - dropout) : 1.0;
  f.xhat.resize(n * h);
  f.out.resize(n);
  f.prob.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z2 = m.b2;
    for (std::size_t u = 0; u < h; ++u) {
      const double a = std::max(0.0, f.z1[i * h + u]);
      const double xh = (a - f.mean[u]) * f.inv_std[u];
      f.xhat[i * h + u] = xh;
      double y = m.gamma[u] * xh + m.beta[u];
      if (keep) y *= (*keep)[i * h + u] ? scale : 0.0;
      z2 += m.w2[u] * y;
    }
    f.out[i] = z2;
    f.prob[i] = sigmoid(z2);
  }
  return f;
}

}  // namespace

double mlp_batch_loss(const MlpModel& m, const TrainingSet& ex, std::span<const std::size_t> rows, NormMode mode,
                      const std::vector<std::uint8_t>* keep, double dropout, MlpGradients* grads) {
  if (rows.empty()) throw ValidationError("mlp_batch_loss: empty batch");
  check_dim(m, ex.dim());
  const Forward f = forward(m, ex, rows, mode, keep, dropout);
  const std::size_t n = f.n, h = f.h;
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = f.prob[i] - ex.label(rows[i]);
    loss += 0.5 * d * d;
  }
  loss *= inv_n;
  if (!grads) return loss;

  zero(*grads, m);
  const double scale = keep ? 1.0 / (1.0 - dropout) : 1.0;
  std::vector<double> dxhat(n * h);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = f.prob[i];
    const double dz2 = (p - ex.label(rows[i])) * inv_n * p * (1.0 - p);
    grads->b2 += dz2;
    for (std::size_t u = 0; u < h; ++u) {
      const double mask = keep ? ((*keep)[i * h + u] ? scale : 0.0) : 1.0;
      const double y = (m.gamma[u] * f.xhat[i * h + u] + m.beta[u]) * mask;
      grads->w2[u] += dz2 * y;
      const double dy = dz2 * m.w2[u] * mask;
      grads->gamma[u] += dy * f.xhat[i * h + u];
      grads->beta[u] += dy;
      dxhat[i * h + u] = dy * m.gamma[u];
    }
  }
  for (std::size_t u = 0; u < h; ++u) {
    double sum_dx = 0, sum_dx_xhat = 0;
    if (mode == NormMode::batch_statistics) {
      for (std::size_t i = 0; i < n; ++i) {
        sum_dx += dxhat[i * h + u];
        sum_dx_xhat += dxhat[i * h + u] * f.xhat[i * h + u];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double da;
      if (mode == NormMode::batch_statistics) {
        da = f.inv_std[u] * inv_n *
             (static_cast<double>(n) * dxhat[i * h + u] - sum_dx - f.xhat[i * h + u] * sum_dx_xhat);
      } else {
        da = dxhat[i * h + u] * f.inv_std[u];
      }
      if (f.z1[i * h + u] <= 0.0) continue;
      grads->b1[u] += da;
      const auto x = ex.row(rows[i]);
      double* gw = grads->w1.data() + u * m.dim;
      for (std::size_t d = 0; d < m.dim; ++d) gw[d] += da * x[d];
    }
  }
  return loss;
}

double mlp_learning_rate(const MlpParams& params, int epoch) {
  return params.learning_rate * std::pow(params.decay, epoch);
}

MlpModel train_mlp(const TrainingSet& examples, const MlpParams& params, Rng& rng) {
  if (examples.empty()) throw ValidationError("train_mlp: no examples");
  if (!examples.has_both_classes()) throw ValidationError("train_mlp: need examples of both classes");
  const std::size_t hidden = params.hidden ? params.hidden : (examples.dim() + 1) / 2;
  if (hidden < 1) throw ValidationError("train_mlp: hidden width must be >= 1");
  if (params.batch_size < 1) throw ValidationError("train_mlp: batch size must be >= 1");
  MlpModel m = init_mlp(examples.dim(), hidden, rng);
  m.bn_epsilon = params.bn_epsilon;

  MlpGradients velocity;
  zero(velocity, m);
  MlpGradients grads;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint8_t> keep;
  const bool use_dropout = params.dropout > 0.0;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const double lr = mlp_learning_rate(params, epoch);
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + params.batch_size);
      // A trailing batch of one has no batch statistics; fold it in.
      if (order.size() - end == 1) end = order.size();
      std::span<const std::size_t> batch(order.data() + start, end - start);
      start = end;

      if (use_dropout) {
        keep.resize(batch.size() * hidden);
        for (auto& k : keep) k = rng.uniform() >= params.dropout ? 1 : 0;
      }
      mlp_batch_loss(m, examples, batch, NormMode::batch_statistics, use_dropout ? &keep : nullptr,
                     params.dropout, &grads);

      // Running statistics from the batch's post-ReLU activations.
      for (std::size_t u = 0; u < hidden; ++u) {
        double mean = 0;
        std::vector<double> acts(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
          const auto x = examples.row(batch[i]);
          acts[i] = std::max(0.0, std::inner_product(x.begin(), x.end(), m.w1.data() + u * m.dim, m.b1[u]));
          mean += acts[i];
        }
        mean /= static_cast<double>(batch.size());
        double var = 0;
        for (double a : acts) var += (a - mean) * (a - mean);
        var /= static_cast<double>(batch.size());
        m.running_mean[u] = params.bn_momentum * m.running_mean[u] + (1.0 - params.bn_momentum) * mean;
        m.running_var[u] = params.bn_momentum * m.running_var[u] + (1.0 - params.bn_momentum) * var;
      }

      auto params_groups = parameter_groups(m);
      auto vel_groups = velocity.groups();
      auto grad_groups = grads.groups();
      for (std::size_t g = 0; g < params_groups.size(); ++g) {
        for (std::size_t k = 0; k < params_groups[g].size(); ++k) {
          vel_groups[g][k] = params.momentum * vel_groups[g][k] - lr * grad_groups[g][k];
          params_groups[g][k] += vel_groups[g][k];
        }
      }
    }
  }
  return m;
}

MlpOutput mlp_margin(const MlpModel& m, std::span<const double> x) {
  check_dim(m, x.size());
  double z2 = m.b2;
  for (std::size_t u = 0; u < m.hidden; ++u) {
    const double a = std::max(0.0, std::inner_product(x.begin(), x.end(), m.w1.data() + u * m.dim, m.b1[u]));
    const double xh = (a - m.running_mean[u]) / std::sqrt(m.running_var[u] + m.bn_epsilon);
    z2 += m.w2[u] * (m.gamma[u] * xh + m.beta[u]);
  }
  return {z2, sigmoid(z2)};
}

int mlp_predict(const MlpModel& model, std::span<const double> x) { return mlp_margin(model, x).margin >= 0.0 ? 1 : 0; }

}  // namespace emal
