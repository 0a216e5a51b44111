#include "darp/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "darp/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace darp {

std::vector<std::vector<double>*> NetParams::arrays() {
  return {&trunk1.w, &trunk1.b, &trunk2.w,    &trunk2.b,
          &value.w,  &value.b,  &advantage.w, &advantage.b};
}

std::vector<const std::vector<double>*> NetParams::arrays() const {
  return {&trunk1.w, &trunk1.b, &trunk2.w,    &trunk2.b,
          &value.w,  &value.b,  &advantage.w, &advantage.b};
}

std::size_t NetParams::count() const {
  std::size_t total = 0;
  for (const auto* a : arrays()) {
    total += a->size();
  }
  return total;
}

void NetParams::fill(double v) {
  for (auto* a : arrays()) {
    std::fill(a->begin(), a->end(), v);
  }
}

DuelingNet::DuelingNet(int input_dim, int hidden_dim, int action_count)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      action_count_(action_count) {
  if (input_dim < 1 || hidden_dim < 1 || action_count < 1) {
    throw std::invalid_argument("DuelingNet: dimensions must be positive");
  }
  params_.trunk1.resize(input_dim, hidden_dim);
  params_.trunk2.resize(hidden_dim, hidden_dim);
  params_.value.resize(hidden_dim, 1);
  params_.advantage.resize(hidden_dim, action_count);
}

DuelingNet DuelingNet::glorot_init(int input_dim, int hidden_dim,
                                   int action_count, std::uint64_t seed) {
  DuelingNet net(input_dim, hidden_dim, action_count);
  Rng rng(derive_seed(seed, seed_stream::net_init));
  auto init_layer = [&rng](LinearLayer& layer) {
    const double bound = std::sqrt(6.0 / (layer.in + layer.out));
    std::uniform_real_distribution<double> pick(-bound, bound);
    for (double& w : layer.w) {
      w = pick(rng);
    }
  };
  init_layer(net.params_.trunk1);
  init_layer(net.params_.trunk2);
  init_layer(net.params_.value);
  init_layer(net.params_.advantage);
  return net;
}

namespace {

void affine(const LinearLayer& layer, std::span<const double> x,
            std::vector<double>& out) {
  out.assign(layer.out, 0.0);
  for (int r = 0; r < layer.out; ++r) {
    double acc = layer.b[r];
    const double* row = layer.w.data() + static_cast<std::size_t>(r) * layer.in;
    for (int c = 0; c < layer.in; ++c) {
      acc += row[c] * x[c];
    }
    out[r] = acc;
  }
}

void relu(const std::vector<double>& pre, std::vector<double>& out) {
  out.resize(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
  }
}

}  // namespace

void DuelingNet::forward_cached(std::span<const double> input,
                                ForwardCache& cache) const {
  if (static_cast<int>(input.size()) != input_dim_) {
    throw std::invalid_argument("forward: wrong input dimension");
  }
  cache.input.assign(input.begin(), input.end());
  affine(params_.trunk1, input, cache.h1_pre);
  relu(cache.h1_pre, cache.h1);
  affine(params_.trunk2, cache.h1, cache.h2_pre);
  relu(cache.h2_pre, cache.h2);

  std::vector<double> v_out;
  affine(params_.value, cache.h2, v_out);
  cache.v = v_out[0];
  affine(params_.advantage, cache.h2, cache.adv);

  double mean_adv = 0.0;
  for (double a : cache.adv) {
    mean_adv += a;
  }
  mean_adv /= action_count_;

  cache.q.resize(action_count_);
  for (int a = 0; a < action_count_; ++a) {
    cache.q[a] = cache.v + cache.adv[a] - mean_adv;
  }
}

std::vector<double> DuelingNet::forward(std::span<const double> input) const {
  ForwardCache cache;
  forward_cached(input, cache);
  return cache.q;
}

namespace {

double weight_total(std::span<const QSample> batch,
                    std::span<const double> targets,
                    std::span<const double> weights) {
  if (batch.empty()) {
    throw std::invalid_argument("loss: empty batch");
  }
  if (targets.size() != batch.size()) {
    throw std::invalid_argument("loss: targets size != batch size");
  }
  if (!weights.empty() && weights.size() != batch.size()) {
    throw std::invalid_argument("loss: weights size != batch size");
  }
  double total = 0.0;
  if (weights.empty()) {
    total = static_cast<double>(batch.size());
  } else {
    for (double w : weights) {
      if (w < 0.0) {
        throw std::invalid_argument("loss: negative weight");
      }
      total += w;
    }
  }
  if (total <= 0.0) {
    throw std::invalid_argument("loss: weight total must be positive");
  }
  return total;
}

}  // namespace

double mse_loss(const DuelingNet& net, std::span<const QSample> batch,
                std::span<const double> targets,
                std::span<const double> weights) {
  const double total = weight_total(batch, targets, weights);
  DuelingNet::ForwardCache cache;
  double loss = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    net.forward_cached(batch[k].input, cache);
    const double r = targets[k] - cache.q[batch[k].action];
    const double w = weights.empty() ? 1.0 : weights[k];
    loss += w * r * r;
  }
  return loss / total;
}

NetParams backward(const DuelingNet& net, std::span<const QSample> batch,
                   std::span<const double> targets,
                   std::span<const double> weights, double* loss_out,
                   std::vector<double>* residuals_out) {
  const double total = weight_total(batch, targets, weights);
  const NetParams& p = net.params();
  const int hidden = net.hidden_dim();
  const int actions = net.action_count();
  const int input_dim = net.input_dim();

  NetParams grads = p;
  grads.fill(0.0);
  if (residuals_out != nullptr) {
    residuals_out->assign(batch.size(), 0.0);
  }

  DuelingNet::ForwardCache cache;
  std::vector<double> d_adv(actions), d_h2(hidden), d_h1(hidden);
  double loss = 0.0;

  for (std::size_t k = 0; k < batch.size(); ++k) {
    const QSample& sample = batch[k];
    if (sample.action < 0 || sample.action >= actions) {
      throw std::invalid_argument("backward: action index out of range");
    }
    net.forward_cached(sample.input, cache);

    const double residual = targets[k] - cache.q[sample.action];
    const double w = weights.empty() ? 1.0 : weights[k];
    loss += w * residual * residual;
    if (residuals_out != nullptr) {
      (*residuals_out)[k] = residual;
    }

    // dL/dQ(s,a) for the taken action; other actions get none directly.
    const double g = 2.0 * w * (cache.q[sample.action] - targets[k]) / total;

    // Dueling aggregation: Q_a = V + A_a - mean(A). The taken action feeds
    // back into every advantage output through the mean.
    const double d_v = g;
    for (int a = 0; a < actions; ++a) {
      d_adv[a] = g * ((a == sample.action ? 1.0 : 0.0) - 1.0 / actions);
    }

    // Head parameters and the shared hidden activation.
    std::fill(d_h2.begin(), d_h2.end(), 0.0);
    for (int c = 0; c < hidden; ++c) {
      grads.value.w[c] += d_v * cache.h2[c];
      d_h2[c] += p.value.w[c] * d_v;
    }
    grads.value.b[0] += d_v;
    for (int a = 0; a < actions; ++a) {
      const std::size_t row = static_cast<std::size_t>(a) * hidden;
      for (int c = 0; c < hidden; ++c) {
        grads.advantage.w[row + c] += d_adv[a] * cache.h2[c];
        d_h2[c] += p.advantage.w[row + c] * d_adv[a];
      }
      grads.advantage.b[a] += d_adv[a];
    }

    // Second trunk layer (through its ReLU).
    std::fill(d_h1.begin(), d_h1.end(), 0.0);
    for (int r = 0; r < hidden; ++r) {
      const double d_pre = cache.h2_pre[r] > 0.0 ? d_h2[r] : 0.0;
      if (d_pre == 0.0) {
        continue;
      }
      const std::size_t row = static_cast<std::size_t>(r) * hidden;
      for (int c = 0; c < hidden; ++c) {
        grads.trunk2.w[row + c] += d_pre * cache.h1[c];
        d_h1[c] += p.trunk2.w[row + c] * d_pre;
      }
      grads.trunk2.b[r] += d_pre;
    }

    // First trunk layer.
    for (int r = 0; r < hidden; ++r) {
      const double d_pre = cache.h1_pre[r] > 0.0 ? d_h1[r] : 0.0;
      if (d_pre == 0.0) {
        continue;
      }
      const std::size_t row = static_cast<std::size_t>(r) * input_dim;
      for (int c = 0; c < input_dim; ++c) {
        grads.trunk1.w[row + c] += d_pre * cache.input[c];
      }
      grads.trunk1.b[r] += d_pre;
    }
  }

  if (loss_out != nullptr) {
    *loss_out = loss / total;
  }
  return grads;
}

void RmsProp::update(NetParams& params, const NetParams& grads) {
  auto param_arrays = params.arrays();
  auto grad_arrays = grads.arrays();
  if (!initialized_) {
    accum_ = params;
    accum_.fill(0.0);
    initialized_ = true;
  }
  auto accum_arrays = accum_.arrays();
  for (std::size_t a = 0; a < param_arrays.size(); ++a) {
    std::vector<double>& p = *param_arrays[a];
    const std::vector<double>& g = *grad_arrays[a];
    std::vector<double>& acc = *accum_arrays[a];
    if (p.size() != g.size() || p.size() != acc.size()) {
      throw std::invalid_argument("rmsprop: parameter shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc[i] = opts_.decay * acc[i] + (1.0 - opts_.decay) * g[i] * g[i];
      const double denom =
          (opts_.raw_denominator ? acc[i] : std::sqrt(acc[i])) + opts_.damping;
      p[i] -= opts_.learning_rate * g[i] / denom;
    }
  }
}

namespace {

constexpr char kMagic[8] = {'D', 'A', 'R', 'P', 'N', 'E', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64s(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) {
    throw CheckpointError(std::string("checkpoint: truncated ") + what);
  }
  return v;
}

void read_f64s(std::istream& in, std::vector<double>& v, const char* what) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) {
    throw CheckpointError(std::string("checkpoint: truncated ") + what);
  }
}

}  // namespace

void save_checkpoint(std::ostream& out, const DuelingNet& net,
                     const RmsProp* opt) {
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(net.input_dim()));
  write_u32(out, static_cast<std::uint32_t>(net.hidden_dim()));
  write_u32(out, static_cast<std::uint32_t>(net.action_count()));
  for (const auto* a : net.params().arrays()) {
    write_f64s(out, *a);
  }
  const bool with_opt = opt != nullptr && opt->initialized();
  out.put(with_opt ? 1 : 0);
  if (with_opt) {
    const double header[3] = {opt->opts_.learning_rate, opt->opts_.decay,
                              opt->opts_.damping};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.put(opt->opts_.raw_denominator ? 1 : 0);
    for (const auto* a : opt->accum_.arrays()) {
      write_f64s(out, *a);
    }
  }
}

bool load_checkpoint(std::istream& in, DuelingNet& net, RmsProp* opt) {
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const int input_dim = static_cast<int>(read_u32(in, "dims"));
  const int hidden = static_cast<int>(read_u32(in, "dims"));
  const int actions = static_cast<int>(read_u32(in, "dims"));
  if (input_dim < 1 || hidden < 1 || actions < 1 || input_dim > 1 << 20 ||
      hidden > 1 << 20 || actions > 1 << 20) {
    throw CheckpointError("checkpoint: implausible dimensions");
  }
  DuelingNet loaded(input_dim, hidden, actions);
  for (auto* a : loaded.params().arrays()) {
    read_f64s(in, *a, "parameters");
  }
  const int flag = in.get();
  if (flag != 0 && flag != 1) {
    throw CheckpointError("checkpoint: truncated optimizer flag");
  }
  bool had_opt = false;
  if (flag == 1) {
    double header[3] = {};
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    const int raw = in.get();
    if (!in || (raw != 0 && raw != 1)) {
      throw CheckpointError("checkpoint: truncated optimizer header");
    }
    NetParams accum = loaded.params();
    accum.fill(0.0);
    for (auto* a : accum.arrays()) {
      read_f64s(in, *a, "optimizer state");
    }
    if (opt != nullptr) {
      opt->opts_.learning_rate = header[0];
      opt->opts_.decay = header[1];
      opt->opts_.damping = header[2];
      opt->opts_.raw_denominator = raw == 1;
      opt->accum_ = std::move(accum);
      opt->initialized_ = true;
    }
    had_opt = true;
  }
  net = std::move(loaded);
  return had_opt;
}

}  // namespace darp
