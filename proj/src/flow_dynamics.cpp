#include "darp/flow_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <random>
#include <string>

namespace darp {

bool ArimaParams::stationary() const {
  for (double lambda : ar_coeffs) {
    if (std::abs(lambda) >= 1.0) {
      return false;
    }
  }
  return true;
}

int ArimaParams::min_history() const {
  return std::max(1, std::max(diff_order, ar_order) + diff_order);
}

ArimaParams default_arima() {
  ArimaParams p;
  p.ar_order = 1;
  p.ma_order = 0;
  p.diff_order = 1;
  p.ar_coeffs = {0.6};
  p.ma_coeffs = {};
  p.noise_var = 400.0;
  p.mean_drift = 0.0;
  return p;
}

std::vector<double> difference(const std::vector<double>& series, int order) {
  if (order < 0) {
    throw std::invalid_argument("difference: negative order");
  }
  if (static_cast<int>(series.size()) <= order) {
    throw std::invalid_argument("difference: series shorter than order + 1");
  }
  std::vector<double> out = series;
  for (int k = 0; k < order; ++k) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      out[i] = out[i + 1] - out[i];
    }
    out.pop_back();
  }
  return out;
}

ArimaParams fit_ar(const std::vector<double>& series, int diff_order,
                   ArFitStats* stats) {
  if (static_cast<int>(series.size()) < diff_order + 10) {
    throw std::invalid_argument("fit_ar: series too short");
  }
  const std::vector<double> w = difference(series, diff_order);
  const int pairs = static_cast<int>(w.size()) - 1;

  double mean_x = 0.0, mean_y = 0.0;
  for (int t = 0; t < pairs; ++t) {
    mean_x += w[t];
    mean_y += w[t + 1];
  }
  mean_x /= pairs;
  mean_y /= pairs;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const double dx = w[t] - mean_x;
    const double dy = w[t + 1] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  // Scale-aware zero-variance check; a constant differenced series carries
  // no information about lambda.
  const double scale = std::max(1.0, std::abs(mean_x));
  if (sxx <= 1e-12 * scale * scale * pairs) {
    throw DegenerateSeriesError(
        "fit_ar: differenced series has zero variance");
  }

  const double lambda = sxy / sxx;
  const double drift = mean_y - lambda * mean_x;
  double ssr = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const double r = w[t + 1] - drift - lambda * w[t];
    ssr += r * r;
  }
  const double var = ssr / (pairs - 2);

  if (stats != nullptr) {
    stats->lambda_se = std::sqrt(var / sxx);
    stats->n_obs = pairs;
  }

  ArimaParams p;
  p.ar_order = 1;
  p.ma_order = 0;
  p.diff_order = diff_order;
  p.ar_coeffs = {lambda};
  p.ma_coeffs = {};
  p.noise_var = var;
  p.mean_drift = drift;
  return p;
}

namespace {

// One step of the AR-on-differences recursion. `levels` is the flow history,
// oldest first, length >= params.min_history(). Returns the next level
// (clamped at zero).
double next_level(const std::vector<double>& levels, const ArimaParams& params,
                  double noise) {
  const int d = params.diff_order;

  // Last value of each difference order 0..d, plus the AR window at order d.
  std::vector<double> work = levels;
  double next = params.mean_drift + noise;
  double integral = 0.0;
  for (int j = 0; j < d; ++j) {
    integral += work.back();
    for (std::size_t i = 0; i + 1 < work.size(); ++i) {
      work[i] = work[i + 1] - work[i];
    }
    work.pop_back();
  }
  for (int k = 0; k < params.ar_order; ++k) {
    next += params.ar_coeffs[k] * work[work.size() - 1 - k];
  }
  return std::max(0.0, next + integral);
}

}  // namespace

std::vector<double> forecast(const ArimaParams& params,
                             const std::vector<double>& history, int horizon,
                             bool with_noise, std::uint64_t seed) {
  if (params.ma_order != 0) {
    throw std::invalid_argument("forecast: MA terms are not supported");
  }
  if (static_cast<int>(params.ar_coeffs.size()) < params.ar_order) {
    throw std::invalid_argument("forecast: missing AR coefficients");
  }
  if (static_cast<int>(history.size()) < params.min_history()) {
    throw std::invalid_argument("forecast: insufficient history");
  }
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(params.noise_var));

  std::vector<double> levels = history;
  std::vector<double> out;
  out.reserve(horizon);
  for (int h = 0; h < horizon; ++h) {
    const double eps =
        (with_noise && params.noise_var > 0.0) ? gauss(rng) : 0.0;
    const double next = next_level(levels, params, eps);
    levels.push_back(next);
    out.push_back(next);
  }
  return out;
}

void ScenarioConfig::validate() const {
  if (base_flow_range.first < 0.0 ||
      base_flow_range.second < base_flow_range.first) {
    throw std::invalid_argument("scenario: base_flow_range is inverted");
  }
  if (congested_mean < 0.0) {
    throw std::invalid_argument("scenario: congested_mean must be >= 0");
  }
  if (congested_var < 0.0) {
    throw std::invalid_argument("scenario: congested_var must be >= 0");
  }
  if (arima.noise_var < 0.0) {
    throw std::invalid_argument("scenario: arima.noise_var must be >= 0");
  }
  if (arima.ar_order < 0 || arima.diff_order < 0 || arima.ma_order != 0) {
    throw std::invalid_argument("scenario: unsupported arima orders");
  }
  if (static_cast<int>(arima.ar_coeffs.size()) != arima.ar_order) {
    throw std::invalid_argument("scenario: arima.ar_coeffs size != ar_order");
  }
}

const std::vector<double>& FlowState::history(NodeId i, NodeId j) const {
  for (const DirectedEdge& e : edges_) {
    if (e.from == i && e.to == j) {
      return e.history;
    }
  }
  throw std::out_of_range("FlowState::history: no such directed edge");
}

FlowState init_flows(const RoadNetwork& net, const ScenarioConfig& cfg) {
  cfg.validate();
  const int n = net.node_count();

  FlowState state;
  state.n_ = n;
  state.t_ = 0;
  state.flows_.assign(static_cast<std::size_t>(n) * n, -1.0);

  std::vector<char> congested(n, 0);
  for (NodeId v : cfg.congested_nodes) {
    if (v < 0 || v >= n) {
      throw std::invalid_argument("scenario: congested node out of range");
    }
    congested[v] = 1;
  }

  Rng rng(derive_seed(cfg.seed, seed_stream::flow_init));
  std::uniform_real_distribution<double> base(cfg.base_flow_range.first,
                                              cfg.base_flow_range.second);
  const double sigma =
      cfg.var_is_std ? cfg.congested_var : std::sqrt(cfg.congested_var);
  std::normal_distribution<double> heavy(cfg.congested_mean, sigma);

  const int history_len = cfg.arima.min_history();
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (i == j || net.distance(i, j) < 0.0) {
        continue;
      }
      double level;
      if (congested[i] || congested[j]) {
        level = std::max(0.0, sigma > 0.0 ? heavy(rng) : cfg.congested_mean);
      } else {
        level = base(rng);
      }
      state.flows_[static_cast<std::size_t>(i) * n + j] = level;
      FlowState::DirectedEdge edge;
      edge.from = i;
      edge.to = j;
      edge.history.assign(history_len, level);  // back-cast constant
      state.edges_.push_back(std::move(edge));
    }
  }
  return state;
}

void step_flows(FlowState& state, const ArimaParams& params, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(params.noise_var));
  const int history_len = params.min_history();
  for (FlowState::DirectedEdge& e : state.edges_) {
    if (static_cast<int>(e.history.size()) < history_len) {
      // Model changed underfoot; extend by repeating the oldest level.
      e.history.insert(e.history.begin(),
                       history_len - e.history.size(), e.history.front());
    }
    const double eps = params.noise_var > 0.0 ? gauss(rng) : 0.0;
    const double next = next_level(e.history, params, eps);
    e.history.push_back(next);
    if (static_cast<int>(e.history.size()) > history_len) {
      e.history.erase(e.history.begin());
    }
    state.flows_[static_cast<std::size_t>(e.from) * state.n_ + e.to] = next;
  }
  ++state.t_;
}

std::vector<double> read_flow_csv(std::istream& in) {
  std::vector<double> values;
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) {
      continue;  // blank line
    }
    std::string tok = line.substr(start);
    if (!tok.empty() && tok.back() == ',') {
      tok.pop_back();
    }
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() + tok.size() && end != tok.c_str()) {
      values.push_back(v);
    } else if (first) {
      // header row
    } else {
      throw std::runtime_error("flow csv: malformed value at line " +
                               std::to_string(lineno));
    }
    first = false;
  }
  if (values.empty()) {
    throw std::runtime_error("flow csv: no data rows");
  }
  return values;
}

}  // namespace darp
