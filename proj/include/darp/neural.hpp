#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace darp {

struct LinearLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out

  void resize(int in_dim, int out_dim) {
    in = in_dim;
    out = out_dim;
    w.assign(static_cast<std::size_t>(in_dim) * out_dim, 0.0);
    b.assign(out_dim, 0.0);
  }
};

// All parameters of the dueling network, in checkpoint order.
struct NetParams {
  LinearLayer trunk1;     // input -> hidden
  LinearLayer trunk2;     // hidden -> hidden
  LinearLayer value;      // hidden -> 1
  LinearLayer advantage;  // hidden -> actions

  // Parameter arrays in declared order (weights then bias per layer).
  std::vector<std::vector<double>*> arrays();
  std::vector<const std::vector<double>*> arrays() const;
  std::size_t count() const;
  void fill(double v);
};

// One regression target for the Q-value of the taken action.
struct QSample {
  std::vector<double> input;
  int action = 0;
};

// Dueling MLP: two ReLU hidden layers feeding a scalar state-value head and
// a per-action advantage head, aggregated with the mean-subtracted form
//   Q_a = V + A_a - mean(A).
class DuelingNet {
 public:
  DuelingNet(int input_dim, int hidden_dim, int action_count);

  // Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.
  static DuelingNet glorot_init(int input_dim, int hidden_dim,
                                int action_count, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int action_count() const { return action_count_; }

  std::vector<double> forward(std::span<const double> input) const;

  // Forward pass retaining activations for backprop.
  struct ForwardCache {
    std::vector<double> input;
    std::vector<double> h1_pre, h1;
    std::vector<double> h2_pre, h2;
    double v = 0.0;
    std::vector<double> adv;
    std::vector<double> q;
  };
  void forward_cached(std::span<const double> input, ForwardCache& cache) const;

  NetParams& params() { return params_; }
  const NetParams& params() const { return params_; }

 private:
  int input_dim_;
  int hidden_dim_;
  int action_count_;
  NetParams params_;
};

// Weighted mean squared error over the taken-action Q-values:
//   L = sum_k w_k (y_k - Q(s_k, a_k))^2 / sum_k w_k,
// with unit weights when `weights` is empty. Throws on an empty batch,
// mismatched lengths, or a non-positive weight total.
double mse_loss(const DuelingNet& net, std::span<const QSample> batch,
                std::span<const double> targets,
                std::span<const double> weights = {});

// Exact gradients of mse_loss with respect to every parameter, including the
// mean-subtraction path through the advantage head. Optionally reports the
// loss and the per-sample residuals y_k - Q(s_k, a_k).
NetParams backward(const DuelingNet& net, std::span<const QSample> batch,
                   std::span<const double> targets,
                   std::span<const double> weights = {},
                   double* loss_out = nullptr,
                   std::vector<double>* residuals_out = nullptr);

// Non-centered RMSProp. Default denominator is sqrt(accumulator) + damping;
// raw_denominator divides by the accumulator itself.
class RmsProp {
 public:
  struct Options {
    double learning_rate = 1e-4;  // eta
    double decay = 0.99;          // alpha
    double damping = 1e-8;        // sigma
    bool raw_denominator = false;
  };

  RmsProp() = default;
  explicit RmsProp(Options opts) : opts_(opts) {}

  const Options& options() const { return opts_; }
  Options& options() { return opts_; }

  // g <- decay*g + (1-decay)*grad^2, then p <- p - eta*grad/denominator.
  // Throws std::invalid_argument on shape mismatch.
  void update(NetParams& params, const NetParams& grads);

  const NetParams& accumulator() const { return accum_; }
  bool initialized() const { return initialized_; }

 private:
  friend void save_checkpoint(std::ostream&, const DuelingNet&,
                              const RmsProp*);
  friend bool load_checkpoint(std::istream&, DuelingNet&, RmsProp*);

  Options opts_{};
  NetParams accum_{};
  bool initialized_ = false;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary checkpoint: magic+version header, layer dims, parameter arrays in
// declared order as little-endian 64-bit floats, then an optional optimizer
// state block. Truncated or corrupt input raises CheckpointError.
void save_checkpoint(std::ostream& out, const DuelingNet& net,
                     const RmsProp* opt = nullptr);

// Returns true when the checkpoint carried optimizer state (loaded into
// `opt` if given).
bool load_checkpoint(std::istream& in, DuelingNet& net,
                     RmsProp* opt = nullptr);

}  // namespace darp
