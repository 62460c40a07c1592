#include "convoy/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "convoy/error.hpp"

namespace convoy::nn {

namespace {

constexpr char kNetMagic[4] = {'C', 'V', 'N', 'N'};
constexpr std::uint32_t kNetFormat = 1;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

DenseNet::DenseNet(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) fail(ErrorCode::Shape, "a dense net needs at least input and output widths");
  for (auto w : widths_) {
    if (w == 0) fail(ErrorCode::Shape, "layer width must be positive");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += (widths_[l] + 1) * widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

DenseNet DenseNet::glorot(std::vector<std::size_t> widths, Rng& rng) {
  DenseNet net(std::move(widths));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const std::size_t fan_in = net.widths_[l];
    const std::size_t fan_out = net.widths_[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t o = 0; o < fan_out; ++o) {
      for (std::size_t i = 0; i < fan_in; ++i) net.weight(l, o, i) = uniform(rng, -limit, limit);
    }
  }
  return net;
}

double& DenseNet::weight(std::size_t layer, std::size_t out, std::size_t in) {
  return params_[weight_offset(layer) + out * widths_[layer] + in];
}
double DenseNet::weight(std::size_t layer, std::size_t out, std::size_t in) const {
  return params_[weight_offset(layer) + out * widths_[layer] + in];
}
double& DenseNet::bias(std::size_t layer, std::size_t out) { return params_[bias_offset(layer) + out]; }
double DenseNet::bias(std::size_t layer, std::size_t out) const { return params_[bias_offset(layer) + out]; }

std::vector<double> DenseNet::forward(std::span<const double> input) const {
  Tape tape;
  forward(input, tape);
  return std::move(tape.act.back());
}

void DenseNet::forward(std::span<const double> input, Tape& tape) const {
  if (input.size() != input_width()) {
    std::ostringstream os;
    os << "dense net expects input width " << input_width() << ", got " << input.size();
    fail(ErrorCode::Shape, os.str());
  }
  const std::size_t layers = layer_count();
  tape.pre.resize(layers);
  tape.act.resize(layers + 1);
  tape.act[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = widths_[l];
    const std::size_t n_out = widths_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const std::vector<double>& x = tape.act[l];
    std::vector<double>& z = tape.pre[l];
    z.resize(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = b[o];
      const double* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
      z[o] = acc;
    }
    std::vector<double>& a = tape.act[l + 1];
    if (l + 1 == layers) {
      a = z;
    } else {
      a.resize(n_out);
      for (std::size_t o = 0; o < n_out; ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
    }
  }
}

void DenseNet::backward(const Tape& tape, std::span<const double> upstream, std::span<double> param_grad,
                        std::span<double> input_grad) const {
  const std::size_t layers = layer_count();
  if (tape.act.size() != layers + 1 || tape.pre.size() != layers) fail(ErrorCode::Shape, "tape does not match net");
  if (upstream.size() != output_width()) fail(ErrorCode::Shape, "upstream gradient width mismatch");
  if (param_grad.size() != params_.size()) fail(ErrorCode::Shape, "parameter gradient buffer size mismatch");
  if (!input_grad.empty() && input_grad.size() != input_width()) {
    fail(ErrorCode::Shape, "input gradient buffer size mismatch");
  }

  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> next;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t n_in = widths_[l];
    const std::size_t n_out = widths_[l + 1];
    if (l + 1 != layers) {
      // ReLU subgradient at zero is zero.
      for (std::size_t o = 0; o < n_out; ++o) {
        if (!(tape.pre[l][o] > 0.0)) delta[o] = 0.0;
      }
    }
    const double* w = params_.data() + weight_offset(l);
    double* gw = param_grad.data() + weight_offset(l);
    double* gb = param_grad.data() + bias_offset(l);
    const std::vector<double>& x = tape.act[l];
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* grow = gw + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) grow[i] += d * x[i];
    }
    if (l == 0 && input_grad.empty()) break;
    next.assign(n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) next[i] += d * row[i];
    }
    delta.swap(next);
  }
  if (!input_grad.empty()) std::copy(delta.begin(), delta.end(), input_grad.begin());
}

std::uint64_t DenseNet::activation_signature(const Tape& tape, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::size_t l = 0; l + 1 < tape.pre.size(); ++l) {
    std::uint64_t word = 0;
    std::size_t bits = 0;
    for (double z : tape.pre[l]) {
      word = (word << 1) | (z > 0.0 ? 1u : 0u);
      if (++bits == 64) {
        h = mix(h, word);
        word = 0;
        bits = 0;
      }
    }
    h = mix(h, word ^ (bits << 58));
  }
  return h;
}

void DenseNet::write(std::ostream& out) const {
  out.write(kNetMagic, 4);
  io::write_u32(out, kNetFormat);
  io::write_u32(out, static_cast<std::uint32_t>(widths_.size()));
  for (auto w : widths_) io::write_u32(out, static_cast<std::uint32_t>(w));
  for (double p : params_) io::write_f64(out, p);
  if (!out) fail(ErrorCode::Io, "failed writing dense net");
}

DenseNet DenseNet::read(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kNetMagic, 4) != 0) fail(ErrorCode::Io, "not a dense net record");
  const auto format = io::read_u32(in);
  if (format != kNetFormat) fail(ErrorCode::Io, "unsupported dense net format version");
  const auto n = io::read_u32(in);
  if (n < 2 || n > 64) fail(ErrorCode::Io, "implausible dense net depth");
  std::vector<std::size_t> widths(n);
  for (auto& w : widths) {
    w = io::read_u32(in);
    if (w == 0 || w > (1u << 20)) fail(ErrorCode::Io, "implausible dense net width");
  }
  DenseNet net(std::move(widths));
  for (double& p : net.params_) p = io::read_f64(in);
  return net;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    fail(ErrorCode::Shape, "adam: parameter, gradient and moment sizes differ");
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (!std::isfinite(grads[k])) {
      std::ostringstream os;
      os << "adam: non-finite gradient at index " << k << " (step " << state.step + 1 << ")";
      fail(ErrorCode::Numerical, os.str());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

GradcheckReport gradcheck(std::span<double> params, std::span<const double> analytic,
                          const std::function<GradcheckProbe()>& evaluate, double tolerance,
                          std::size_t samples, std::uint64_t seed, double step) {
  if (params.size() != analytic.size()) fail(ErrorCode::Shape, "gradcheck: gradient size mismatch");
  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (samples != 0 && samples < coords.size()) {
    Rng rng(seed);
    for (std::size_t k = 0; k < samples; ++k) {
      const auto pick = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(k),
                                                             static_cast<std::int64_t>(coords.size() - 1)));
      std::swap(coords[k], coords[pick]);
    }
    coords.resize(samples);
  }

  double scale = 0.0;
  for (double g : analytic) scale = std::max(scale, std::abs(g));
  const double floor = std::max(1e-6 * scale, 1e-300);

  GradcheckReport report;
  const GradcheckProbe base = evaluate();
  for (std::size_t c : coords) {
    const double saved = params[c];
    params[c] = saved + step;
    const GradcheckProbe plus = evaluate();
    params[c] = saved - step;
    const GradcheckProbe minus = evaluate();
    params[c] = saved;
    if (plus.signature != base.signature || minus.signature != base.signature) {
      ++report.skipped;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * step);
    const double a = analytic[c];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    report.max_rel_error = std::max(report.max_rel_error, err);
    ++report.checked;
  }
  report.passed = report.checked > 0 && report.max_rel_error < tolerance;
  return report;
}

GradcheckReport gradcheck(DenseNet& net, std::span<const double> input,
                          const std::function<double(std::span<const double>, std::span<double>)>& loss,
                          double tolerance, std::size_t samples, std::uint64_t seed) {
  DenseNet::Tape tape;
  std::vector<double> out_grad(net.output_width());
  net.forward(input, tape);
  loss(tape.output(), out_grad);
  std::vector<double> analytic(net.parameter_count(), 0.0);
  net.backward(tape, out_grad, analytic, {});

  auto evaluate = [&]() {
    DenseNet::Tape t;
    net.forward(input, t);
    std::vector<double> scratch(net.output_width());
    const double value = loss(t.output(), scratch);
    return GradcheckProbe{value, DenseNet::activation_signature(t)};
  };
  return gradcheck(net.params(), analytic, evaluate, tolerance, samples, seed);
}

namespace io {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) fail(ErrorCode::Io, "truncated checkpoint");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) fail(ErrorCode::Io, "truncated checkpoint");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

}  // namespace io

}  // namespace convoy::nn
