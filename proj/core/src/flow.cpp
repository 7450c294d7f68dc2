#include "nfl/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nfl/rng.hpp"

namespace nfl {

namespace {

// Saturating elementwise nonlinearity between layers. Softsign keeps a
// nonzero derivative in double precision over the whole feature range, so
// distinct inputs cannot collapse to bit-identical outputs the way a
// hard-saturating activation would.
inline double act(double u) { return u / (1.0 + std::fabs(u)); }
inline double act_deriv(double u) {
  double t = 1.0 + std::fabs(u);
  return 1.0 / (t * t);
}
inline double log_act_deriv(double u) { return -2.0 * std::log1p(std::fabs(u)); }
inline double dlog_act_deriv_du(double u) {
  return (u >= 0.0 ? -2.0 : 2.0) / (1.0 + std::fabs(u));
}

struct LayerShape {
  std::uint32_t p_in, p_out;
  std::uint32_t in_width, out_width;
  std::size_t w_offset;  // into FlowParams::weights
  std::size_t b_offset;  // into FlowParams::biases
};

// Packed row layout: rows grouped by output block kb, each row stores the
// (kb + 1) * p_in allowed columns.
inline std::size_t row_offset(const LayerShape& s, std::uint32_t kb, std::uint32_t r) {
  std::size_t per_dim = static_cast<std::size_t>(s.p_in) * s.p_out;
  return per_dim * (static_cast<std::size_t>(kb) * (kb + 1) / 2) +
         static_cast<std::size_t>(r) * (kb + 1) * s.p_in;
}

std::vector<LayerShape> layer_shapes(const FlowConfig& cfg) {
  std::vector<LayerShape> shapes(cfg.layers + 1);  // [1..L]
  std::size_t woff = 0, boff = 0;
  for (std::uint32_t l = 1; l <= cfg.layers; ++l) {
    LayerShape s;
    s.p_in = (l == 1) ? 1 : cfg.hidden_mult;
    s.p_out = (l == cfg.layers) ? 1 : cfg.hidden_mult;
    s.in_width = cfg.dims * s.p_in;
    s.out_width = cfg.dims * s.p_out;
    s.w_offset = woff;
    s.b_offset = boff;
    woff += static_cast<std::size_t>(s.p_in) * s.p_out * cfg.dims * (cfg.dims + 1) / 2;
    boff += s.out_width;
    shapes[l] = s;
  }
  return shapes;
}

double log_sigma_const(double sigma) { return std::log(sigma) + 0.5 * std::log(2.0 * M_PI); }

// Forward/backward workspace. Holds the per-item trace needed for exact
// gradients: pre-activations, activations, log activation derivatives, and
// the log-space diagonal-block chain (c_pre before adding the activation
// term, c_post after).
class FlowNet {
 public:
  explicit FlowNet(const FlowParams& p) : p_(p), shapes_(layer_shapes(p.config)) {
    const std::uint32_t L = p_.config.layers;
    u_.resize(L + 1);
    h_.resize(L + 1);
    s_.resize(L + 1);
    cpre_.resize(L + 1);
    cpost_.resize(L + 1);
    dU_.resize(L + 1);
    h_[0].resize(p_.config.dims);
    cpost_[0].assign(p_.config.dims, 0.0);
    for (std::uint32_t l = 1; l <= L; ++l) {
      u_[l].resize(shapes_[l].out_width);
      h_[l].resize(shapes_[l].out_width);
      s_[l].resize(shapes_[l].out_width);
      cpre_[l].resize(shapes_[l].out_width);
      cpost_[l].resize(shapes_[l].out_width);
      dU_[l].resize(shapes_[l].out_width);
    }
    dH_.resize(p_.config.dims * std::max<std::uint32_t>(1, p_.config.hidden_mult));
    refresh_effective();
  }

  // Materializes effective weights from the stored reals; call after a
  // parameter step.
  //
  // All entries are positive: exp() everywhere, and in the first layer each
  // row additionally forms a significance chain over the input dimensions,
  //   eff[j] = theta * eff[j+1] + exp(stored[j]),   eff[diag] = exp(stored).
  // A feature vector encodes one scalar, so moving to the next key can bump
  // dimension j by one while every junior dimension resets from at most
  // theta. The chain makes that net pre-activation change strictly positive
  // in every unit, which makes the merged transformed key strictly
  // increasing in the original key for any parameter values.
  void refresh_effective() {
    expw_.resize(p_.weights.size());
    for (std::size_t i = 0; i < p_.weights.size(); ++i) expw_[i] = std::exp(p_.weights[i]);
    eff_ = expw_;
    const std::uint32_t d = p_.config.dims;
    const double theta = p_.config.theta;
    const LayerShape& first = shapes_[1];
    for (std::uint32_t kb = 1; kb < d; ++kb) {
      for (std::uint32_t r = 0; r < first.p_out; ++r) {
        std::size_t base = first.w_offset + row_offset(first, kb, r);
        for (std::uint32_t j = kb; j-- > 0;) eff_[base + j] += theta * eff_[base + j + 1];
      }
    }
  }

  // x and z have d entries. When with_logdet is false the chain trace is
  // skipped.
  void forward(std::span<const double> x, std::span<double> z, bool with_logdet,
               double* logdet_out) {
    const std::uint32_t d = p_.config.dims;
    const std::uint32_t L = p_.config.layers;
    std::copy(x.begin(), x.end(), h_[0].begin());

    for (std::uint32_t l = 1; l <= L; ++l) {
      const LayerShape& s = shapes_[l];
      const std::vector<double>& in = h_[l - 1];
      for (std::uint32_t kb = 0; kb < d; ++kb) {
        const std::uint32_t ncols = (kb + 1) * s.p_in;
        for (std::uint32_t r = 0; r < s.p_out; ++r) {
          const std::uint32_t R = kb * s.p_out + r;
          const double* w = eff_.data() + s.w_offset + row_offset(s, kb, r);
          double acc = p_.biases[s.b_offset + R];
          for (std::uint32_t c = 0; c < ncols; ++c) acc += w[c] * in[c];
          u_[l][R] = acc;
        }
      }
      if (l < L) {
        for (std::uint32_t R = 0; R < s.out_width; ++R) {
          h_[l][R] = act(u_[l][R]);
          s_[l][R] = log_act_deriv(u_[l][R]);
        }
      }
    }
    const LayerShape& last = shapes_[L];
    for (std::uint32_t k = 0; k < d; ++k) z[k] = u_[L][last.p_out * k];

    if (!with_logdet) return;

    // Diagonal-block chain in log space: the stored weight of a diagonal
    // entry is already the log of its effective value.
    for (std::uint32_t l = 1; l <= L; ++l) {
      const LayerShape& s = shapes_[l];
      for (std::uint32_t kb = 0; kb < d; ++kb) {
        for (std::uint32_t r = 0; r < s.p_out; ++r) {
          const std::uint32_t R = kb * s.p_out + r;
          const double* wraw =
              p_.weights.data() + s.w_offset + row_offset(s, kb, r) + std::size_t(kb) * s.p_in;
          const double* cprev = cpost_[l - 1].data() + std::size_t(kb) * s.p_in;
          double mx = -std::numeric_limits<double>::infinity();
          for (std::uint32_t j = 0; j < s.p_in; ++j) mx = std::max(mx, wraw[j] + cprev[j]);
          double sum = 0.0;
          for (std::uint32_t j = 0; j < s.p_in; ++j) sum += std::exp(wraw[j] + cprev[j] - mx);
          cpre_[l][R] = mx + std::log(sum);
          cpost_[l][R] = cpre_[l][R] + (l < L ? s_[l][R] : 0.0);
        }
      }
    }
    double ld = 0.0;
    for (std::uint32_t k = 0; k < d; ++k) ld += cpost_[L][k];
    *logdet_out = ld;
  }

  // Accumulates d(loglik)/d(params) for the item traced by the last
  // forward(with_logdet=true) call. z is the forward output.
  void backward(std::span<const double> z, double sigma, std::span<double> gw,
                std::span<double> gb) {
    const std::uint32_t d = p_.config.dims;
    const std::uint32_t L = p_.config.layers;
    for (std::uint32_t l = 1; l <= L; ++l) std::fill(dU_[l].begin(), dU_[l].end(), 0.0);

    const LayerShape& last = shapes_[L];
    for (std::uint32_t k = 0; k < d; ++k)
      dU_[L][last.p_out * k] = -z[k] / (sigma * sigma);

    // logdet backward: softmax responsibilities through the log-space chain,
    // plus the direct activation-derivative terms feeding dU.
    std::vector<double> g, gnext;
    for (std::uint32_t kb = 0; kb < d; ++kb) {
      g.assign(1, 1.0);
      for (std::uint32_t l = L; l >= 1; --l) {
        const LayerShape& s = shapes_[l];
        if (l < L) {
          for (std::uint32_t r = 0; r < s.p_out; ++r) {
            const std::uint32_t R = kb * s.p_out + r;
            dU_[l][R] += g[r] * dlog_act_deriv_du(u_[l][R]);
          }
        }
        gnext.assign(s.p_in, 0.0);
        for (std::uint32_t r = 0; r < s.p_out; ++r) {
          const std::uint32_t R = kb * s.p_out + r;
          std::size_t base = s.w_offset + row_offset(s, kb, r) + std::size_t(kb) * s.p_in;
          for (std::uint32_t j = 0; j < s.p_in; ++j) {
            double a = p_.weights[base + j] + cpost_[l - 1][std::size_t(kb) * s.p_in + j];
            double sm = std::exp(a - cpre_[l][R]) * g[r];
            gw[base + j] += sm;
            gnext[j] += sm;
          }
        }
        g = gnext;
        if (l == 1) break;
      }
    }

    // Affine backward sweep. Every effective entry chains through its
    // exponentiation; first-layer rows additionally distribute gradient down
    // the significance chain (eff[j] feeds every senior entry with a theta
    // power).
    const double theta = p_.config.theta;
    for (std::uint32_t l = L; l >= 1; --l) {
      const LayerShape& s = shapes_[l];
      std::fill(dH_.begin(), dH_.begin() + s.in_width, 0.0);
      for (std::uint32_t kb = 0; kb < d; ++kb) {
        const std::uint32_t ncols = (kb + 1) * s.p_in;
        for (std::uint32_t r = 0; r < s.p_out; ++r) {
          const std::uint32_t R = kb * s.p_out + r;
          const double du = dU_[l][R];
          gb[s.b_offset + R] += du;
          if (du == 0.0) continue;
          std::size_t base = s.w_offset + row_offset(s, kb, r);
          if (l == 1) {
            double acc = 0.0;
            for (std::uint32_t c = 0; c < ncols; ++c) {
              acc = theta * acc + du * h_[l - 1][c];
              gw[base + c] += expw_[base + c] * acc;
              dH_[c] += eff_[base + c] * du;
            }
          } else {
            for (std::uint32_t c = 0; c < ncols; ++c) {
              double eff = eff_[base + c];
              gw[base + c] += du * h_[l - 1][c] * eff;
              dH_[c] += eff * du;
            }
          }
        }
      }
      if (l > 1) {
        for (std::uint32_t c = 0; c < s.in_width; ++c)
          dU_[l - 1][c] += dH_[c] * act_deriv(u_[l - 1][c]);
      }
    }
  }

 private:
  const FlowParams& p_;
  std::vector<LayerShape> shapes_;
  std::vector<double> eff_;   // effective matrix entries
  std::vector<double> expw_;  // exp(stored), before the first-layer chain
  std::vector<std::vector<double>> u_, h_, s_, cpre_, cpost_, dU_;
  std::vector<double> dH_;
};

inline double item_loglik(std::span<const double> z, double logdet, double sigma) {
  double ll = logdet - static_cast<double>(z.size()) * log_sigma_const(sigma);
  for (double zk : z) ll -= zk * zk / (2.0 * sigma * sigma);
  return ll;
}

}  // namespace

void validate(const FlowConfig& cfg) {
  if (cfg.dims < 2) throw InvalidArgument("flow: dims must be >= 2");
  if (cfg.layers < 1) throw InvalidArgument("flow: layers must be >= 1");
  if (cfg.hidden_mult < 1) throw InvalidArgument("flow: hidden_mult must be >= 1");
  if (!(cfg.sigma_latent > 0.0)) throw InvalidArgument("flow: sigma_latent must be > 0");
  if (!(cfg.theta > 1.0)) throw InvalidArgument("flow: theta must be > 1");
  if (cfg.batch_size < 1) throw InvalidArgument("flow: batch_size must be >= 1");
  if (!(cfg.sample_fraction > 0.0) || cfg.sample_fraction > 1.0)
    throw InvalidArgument("flow: sample_fraction must be in (0, 1]");
}

std::size_t weight_count(const FlowConfig& cfg) {
  std::size_t n = 0;
  for (const LayerShape& s : layer_shapes(cfg))
    n += static_cast<std::size_t>(s.p_in) * s.p_out * cfg.dims * (cfg.dims + 1) / 2;
  return n;
}

std::size_t bias_count(const FlowConfig& cfg) {
  std::size_t n = 0;
  for (const LayerShape& s : layer_shapes(cfg)) n += s.out_width;
  return n;
}

FlowParams init_flow(const FlowConfig& cfg, const CodecParams& codec) {
  validate(cfg);
  Rng root(cfg.seed);
  Rng init(root.fork_seed());
  FlowParams p;
  p.config = cfg;
  p.codec = codec;
  p.weights.resize(weight_count(cfg));
  for (double& w : p.weights) w = init.next_double(-0.1, 0.1);
  p.biases.assign(bias_count(cfg), 0.0);
  return p;
}

FlowParams bypass_flow(const FlowConfig& cfg, const CodecParams& codec) {
  validate(cfg);
  FlowParams p;
  p.config = cfg;
  p.codec = codec;
  p.weights.assign(weight_count(cfg), 0.0);
  p.biases.assign(bias_count(cfg), 0.0);
  p.bypass = true;
  return p;
}

TransformResult flow_forward(const std::vector<FeatureVector>& x_batch, const FlowParams& params) {
  validate(params.config);
  const std::uint32_t d = params.config.dims;
  for (const FeatureVector& x : x_batch)
    if (x.size() != d) throw ShapeMismatch("flow_forward: feature vector length != dims");

  TransformResult out;
  out.z_batch.resize(x_batch.size());
  out.logdet_batch.resize(x_batch.size());
  if (params.bypass) {
    out.z_batch = x_batch;
    std::fill(out.logdet_batch.begin(), out.logdet_batch.end(), 0.0);
    return out;
  }

  FlowNet net(params);
  for (std::size_t i = 0; i < x_batch.size(); ++i) {
    out.z_batch[i].resize(d);
    net.forward(x_batch[i], out.z_batch[i], true, &out.logdet_batch[i]);
  }
  return out;
}

double log_likelihood(const TransformResult& result, double sigma_latent) {
  if (result.z_batch.empty()) throw InvalidArgument("log_likelihood: empty batch");
  if (result.z_batch.size() != result.logdet_batch.size())
    throw InvalidArgument("log_likelihood: batch length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < result.z_batch.size(); ++i)
    total += item_loglik(result.z_batch[i], result.logdet_batch[i], sigma_latent);
  return total / static_cast<double>(result.z_batch.size());
}

double loss_and_gradient(const std::vector<FeatureVector>& x_batch, const FlowParams& params,
                         std::span<double> grad_weights, std::span<double> grad_biases) {
  if (x_batch.empty()) throw InvalidArgument("loss_and_gradient: empty batch");
  if (grad_weights.size() != params.weights.size() || grad_biases.size() != params.biases.size())
    throw InvalidArgument("loss_and_gradient: gradient buffer size mismatch");
  const std::uint32_t d = params.config.dims;
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  std::fill(grad_biases.begin(), grad_biases.end(), 0.0);

  FlowNet net(params);
  std::vector<double> z(d);
  double total = 0.0;
  for (const FeatureVector& x : x_batch) {
    if (x.size() != d) throw ShapeMismatch("loss_and_gradient: feature vector length != dims");
    double logdet = 0.0;
    net.forward(x, z, true, &logdet);
    total += item_loglik(z, logdet, params.config.sigma_latent);
    net.backward(z, params.config.sigma_latent, grad_weights, grad_biases);
  }
  const double inv = 1.0 / static_cast<double>(x_batch.size());
  for (double& g : grad_weights) g *= inv;
  for (double& g : grad_biases) g *= inv;
  return total * inv;
}

FlowParams train_flow(std::span<const Key> keys, const FlowConfig& cfg, TrainStats* stats) {
  validate(cfg);
  if (keys.size() < 2) throw InvalidArgument("train_flow: need at least 2 keys");
  CodecParams codec = fit_codec(keys, cfg.theta, cfg.dims);

  Rng root(cfg.seed);
  Rng init_rng(root.fork_seed());
  Rng sample_rng(root.fork_seed());
  Rng shuffle_rng(root.fork_seed());

  FlowParams params;
  params.config = cfg;
  params.codec = codec;
  params.weights.resize(weight_count(cfg));
  for (double& w : params.weights) w = init_rng.next_double(-0.1, 0.1);
  params.biases.assign(bias_count(cfg), 0.0);

  if (cfg.epochs == 0) return params;

  // Seeded uniform sample without replacement.
  const std::size_t n = keys.size();
  std::size_t m = static_cast<std::size_t>(std::llround(cfg.sample_fraction * double(n)));
  m = std::clamp<std::size_t>(m, 2, n);
  std::vector<std::uint64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + static_cast<std::size_t>(sample_rng.next_below(n - i));
    std::swap(idx[i], idx[j]);
  }

  const std::uint32_t d = cfg.dims;
  std::vector<double> features(m * d);
  for (std::size_t i = 0; i < m; ++i)
    expand_into(normalize(keys[idx[i]], codec), codec, {features.data() + i * d, d});

  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> gw(params.weights.size()), gb(params.biases.size());
  std::vector<double> z(d);
  FlowNet net(params);

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < m; start += cfg.batch_size) {
      const std::size_t stop = std::min(m, start + cfg.batch_size);
      std::fill(gw.begin(), gw.end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      double loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const double* x = features.data() + std::size_t(order[b]) * d;
        double logdet = 0.0;
        net.forward({x, d}, z, true, &logdet);
        loss += item_loglik(z, logdet, cfg.sigma_latent);
        net.backward(z, cfg.sigma_latent, gw, gb);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      loss *= inv;
      double norm_sq = 0.0;
      for (double& g : gw) {
        g *= inv;
        norm_sq += g * g;
      }
      for (double& g : gb) {
        g *= inv;
        norm_sq += g * g;
      }
      if (!std::isfinite(loss) || !std::isfinite(norm_sq))
        throw FlowDiverged("train_flow: non-finite loss or gradient");
      if (stats) stats->step_loglik.push_back(loss);

      double scale = cfg.learning_rate;
      constexpr double kClipNorm = 10.0;
      double norm = std::sqrt(norm_sq);
      if (norm > kClipNorm) scale *= kClipNorm / norm;
      for (std::size_t i = 0; i < gw.size(); ++i) params.weights[i] += scale * gw[i];
      for (std::size_t i = 0; i < gb.size(); ++i) params.biases[i] += scale * gb[i];
      net.refresh_effective();
    }
    if (stats) stats->epoch_step_end.push_back(stats->step_loglik.size());
  }
  return params;
}

std::vector<double> transform_keys(std::span<const Key> keys, const FlowParams& params) {
  validate(params.config);
  const std::uint32_t d = params.config.dims;
  std::vector<double> out(keys.size());
  if (keys.empty()) return out;

  std::vector<double> z(d);
  const std::size_t batch = params.config.batch_size;
  for (std::size_t start = 0; start < keys.size(); start += batch) {
    const std::size_t stop = std::min(keys.size(), start + batch);
    // One inference invocation per batch: assemble the feature matrix, set up
    // the evaluator (weight materialization), run the batch. Per-call setup
    // amortizes over the batch exactly as in the online execute path.
    std::vector<double> features((stop - start) * d);
    for (std::size_t i = start; i < stop; ++i)
      expand_into(normalize(keys[i], params.codec), params.codec,
                  {features.data() + (i - start) * d, d});
    if (params.bypass) {
      for (std::size_t i = start; i < stop; ++i)
        out[i] = merge({features.data() + (i - start) * d, d});
    } else {
      FlowNet net(params);
      for (std::size_t i = start; i < stop; ++i) {
        net.forward({features.data() + (i - start) * d, d}, z, false, nullptr);
        out[i] = merge(z);
      }
    }
  }
  return out;
}

double evaluate_log_likelihood(std::span<const Key> keys, const FlowParams& params) {
  if (keys.empty()) throw InvalidArgument("evaluate_log_likelihood: empty key set");
  const std::uint32_t d = params.config.dims;
  FlowNet net(params);
  std::vector<double> x(d), z(d);
  double total = 0.0;
  for (Key k : keys) {
    expand_into(normalize(k, params.codec), params.codec, x);
    if (params.bypass) {
      total += item_loglik(x, 0.0, params.config.sigma_latent);
    } else {
      double logdet = 0.0;
      net.forward(x, z, true, &logdet);
      total += item_loglik(z, logdet, params.config.sigma_latent);
    }
  }
  return total / static_cast<double>(keys.size());
}

// --- serialization ---

namespace {

constexpr char kMagic[4] = {'N', 'F', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }

void put_u32(std::ostream& os, std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  put_bytes(os, b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  put_bytes(os, b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

void get_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw TruncatedFile("load_flow: unexpected end of data");
}

std::uint8_t get_u8(std::istream& is) {
  std::uint8_t v;
  get_bytes(is, &v, 1);
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  std::uint8_t b[4];
  get_bytes(is, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  std::uint8_t b[8];
  get_bytes(is, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void save_flow(const FlowParams& params, std::ostream& sink) {
  put_bytes(sink, kMagic, 4);
  put_u32(sink, kVersion);
  put_u32(sink, params.config.dims);
  put_u32(sink, params.config.layers);
  put_u32(sink, params.config.hidden_mult);
  put_f64(sink, params.config.sigma_latent);
  put_f64(sink, params.codec.theta);
  put_f64(sink, params.codec.mu);
  put_f64(sink, params.codec.sigma);
  put_u8(sink, params.bypass ? 1 : 0);
  put_u64(sink, params.weights.size());
  for (double w : params.weights) put_f64(sink, w);
  put_u64(sink, params.biases.size());
  for (double b : params.biases) put_f64(sink, b);
  if (!sink) throw Error("save_flow: write failed");
}

void save_flow(const FlowParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_flow: cannot open " + path);
  save_flow(params, os);
}

FlowParams load_flow(std::istream& source) {
  char magic[4];
  source.read(magic, 4);
  if (source.gcount() != 4) throw TruncatedFile("load_flow: file shorter than magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw BadMagic("load_flow: bad magic bytes");
  std::uint32_t version = get_u32(source);
  if (version != kVersion)
    throw VersionMismatch("load_flow: unsupported version " + std::to_string(version));

  FlowParams p;
  p.config.dims = get_u32(source);
  p.config.layers = get_u32(source);
  p.config.hidden_mult = get_u32(source);
  p.config.sigma_latent = get_f64(source);
  p.config.theta = get_f64(source);
  p.codec.theta = p.config.theta;
  p.codec.dims = p.config.dims;
  p.codec.mu = get_f64(source);
  p.codec.sigma = get_f64(source);
  p.bypass = get_u8(source) != 0;

  validate(p.config);
  std::uint64_t wc = get_u64(source);
  if (wc != weight_count(p.config))
    throw FileFormat("load_flow: weight count does not match architecture");
  p.weights.resize(wc);
  for (double& w : p.weights) w = get_f64(source);
  std::uint64_t bc = get_u64(source);
  if (bc != bias_count(p.config))
    throw FileFormat("load_flow: bias count does not match architecture");
  p.biases.resize(bc);
  for (double& b : p.biases) b = get_f64(source);
  return p;
}

FlowParams load_flow(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_flow: cannot open " + path);
  return load_flow(is);
}

bool FlowParams::same_model(const FlowParams& other) const {
  auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
  if (config.dims != other.config.dims || config.layers != other.config.layers ||
      config.hidden_mult != other.config.hidden_mult || bypass != other.bypass)
    return false;
  if (bits(config.sigma_latent) != bits(other.config.sigma_latent)) return false;
  if (bits(codec.theta) != bits(other.codec.theta) || bits(codec.mu) != bits(other.codec.mu) ||
      bits(codec.sigma) != bits(other.codec.sigma))
    return false;
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (bits(weights[i]) != bits(other.weights[i])) return false;
  for (std::size_t i = 0; i < biases.size(); ++i)
    if (bits(biases[i]) != bits(other.biases[i])) return false;
  return true;
}

}  // namespace nfl
