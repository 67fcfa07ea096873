#include "dtsync/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "dtsync/kernels.hpp"

namespace dtsync::nn {

namespace {
void check_spec(const MlpSpec& spec) {
  if (spec.sizes.size() < 2)
    throw std::invalid_argument("MlpSpec: need at least input and output sizes");
  for (int s : spec.sizes)
    if (s < 1) throw std::invalid_argument("MlpSpec: all sizes must be >= 1");
}
}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < num_layers(); ++l)
    n += std::size_t(sizes[l]) * sizes[l + 1] + sizes[l + 1];
  return n;
}

std::size_t MlpSpec::weight_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l)
    off += std::size_t(sizes[l]) * sizes[l + 1] + sizes[l + 1];
  return off;
}

std::size_t MlpSpec::bias_offset(int layer) const {
  return weight_offset(layer) + std::size_t(sizes[layer]) * sizes[layer + 1];
}

ParamSet::ParamSet(MlpSpec spec) : spec_(std::move(spec)) {
  check_spec(spec_);
  flat_.assign(spec_.param_count(), 0.0);
}

ParamSet ParamSet::glorot(const MlpSpec& spec, rng::RngStream& rng) {
  ParamSet p(spec);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int fan_in = spec.sizes[l];
    const int fan_out = spec.sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    double* w = p.w(l);
    const std::size_t n = std::size_t(fan_in) * fan_out;
    for (std::size_t i = 0; i < n; ++i) w[i] = rng.uniform(-limit, limit);
  }
  return p;
}

void ParamSet::zero() { std::fill(flat_.begin(), flat_.end(), 0.0); }

void ParamSet::scale_layer(int layer, double factor) {
  const std::size_t begin = spec_.weight_offset(layer);
  const std::size_t end = (layer + 1 < spec_.num_layers())
                              ? spec_.weight_offset(layer + 1)
                              : flat_.size();
  for (std::size_t i = begin; i < end; ++i) flat_[i] *= factor;
}

bool ParamSet::all_finite() const {
  for (double v : flat_)
    if (!std::isfinite(v)) return false;
  return true;
}

Workspace::Workspace(const MlpSpec& spec) { resize(spec); }

void Workspace::resize(const MlpSpec& spec) {
  const int L = spec.num_layers();
  pre.resize(L);
  hidden.resize(L > 0 ? L - 1 : 0);
  int widest = 0;
  for (int l = 0; l < L; ++l) {
    pre[l].resize(spec.sizes[l + 1]);
    if (l < L - 1) hidden[l].resize(spec.sizes[l + 1]);
    widest = std::max(widest, spec.sizes[l + 1]);
  }
  delta_a.resize(widest);
  delta_b.resize(widest);
}

std::span<const double> forward(const ParamSet& params,
                                std::span<const double> input, Workspace& ws) {
  const MlpSpec& spec = params.spec();
  if (input.size() != static_cast<std::size_t>(spec.input_dim()))
    throw std::invalid_argument("forward: input size mismatch");
  const int L = spec.num_layers();
  const double* in = input.data();
  for (int l = 0; l < L; ++l) {
    kern::matvec(params.w(l), spec.sizes[l + 1], spec.sizes[l], in,
                 params.b(l), ws.pre[l].data());
    if (l < L - 1) {
      kern::relu(ws.pre[l].data(), ws.hidden[l].data(), ws.hidden[l].size());
      in = ws.hidden[l].data();
    }
  }
  return ws.output();
}

std::vector<double> forward(const ParamSet& params,
                            const std::vector<double>& input) {
  Workspace ws(params.spec());
  auto out = forward(params, input, ws);
  return {out.begin(), out.end()};
}

void backward(const ParamSet& params, std::span<const double> input,
              Workspace& ws, std::span<const double> upstream, ParamSet& grad,
              double* input_grad) {
  const MlpSpec& spec = params.spec();
  if (upstream.size() != static_cast<std::size_t>(spec.output_dim()))
    throw std::invalid_argument("backward: upstream size mismatch");
  if (grad.spec() != spec)
    throw std::invalid_argument("backward: gradient shape mismatch");
  const int L = spec.num_layers();

  double* delta = ws.delta_a.data();
  double* next_delta = ws.delta_b.data();
  std::memcpy(delta, upstream.data(), upstream.size() * sizeof(double));

  for (int l = L - 1; l >= 0; --l) {
    const int rows = spec.sizes[l + 1];
    const int cols = spec.sizes[l];
    const double* act_in = (l == 0) ? input.data() : ws.hidden[l - 1].data();
    kern::ger_acc(grad.w(l), rows, cols, delta, act_in);
    kern::axpy(1.0, delta, grad.b(l), rows);
    if (l > 0) {
      kern::matvec_t(params.w(l), rows, cols, delta, next_delta);
      kern::relu_backward(ws.pre[l - 1].data(), next_delta, next_delta, cols);
      std::swap(delta, next_delta);
    } else if (input_grad != nullptr) {
      kern::matvec_t(params.w(l), rows, cols, delta, input_grad);
    }
  }
}

void gradients(const ParamSet& params, std::span<const double> input,
               std::span<const double> upstream, ParamSet& grad,
               double* input_grad) {
  Workspace ws(params.spec());
  forward(params, input, ws);
  backward(params, input, ws, upstream, grad, input_grad);
}

void input_gradient(const ParamSet& params, Workspace& ws,
                    std::span<const double> upstream, double* input_grad) {
  const MlpSpec& spec = params.spec();
  if (upstream.size() != static_cast<std::size_t>(spec.output_dim()))
    throw std::invalid_argument("input_gradient: upstream size mismatch");
  const int L = spec.num_layers();

  double* delta = ws.delta_a.data();
  double* next_delta = ws.delta_b.data();
  std::memcpy(delta, upstream.data(), upstream.size() * sizeof(double));
  for (int l = L - 1; l > 0; --l) {
    kern::matvec_t(params.w(l), spec.sizes[l + 1], spec.sizes[l], delta,
                   next_delta);
    kern::relu_backward(ws.pre[l - 1].data(), next_delta, next_delta,
                        spec.sizes[l]);
    std::swap(delta, next_delta);
  }
  kern::matvec_t(params.w(0), spec.sizes[1], spec.sizes[0], delta, input_grad);
}

AdamState::AdamState(std::size_t n, double lr_in)
    : m(n, 0.0), v(n, 0.0), lr(lr_in) {}

void adam_step(ParamSet& params, const ParamSet& grad, AdamState& state) {
  if (grad.size() != params.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double bc1_inv = 1.0 / (1.0 - std::pow(state.beta1, state.step));
  const double bc2_inv = 1.0 / (1.0 - std::pow(state.beta2, state.step));
  const int bad = kern::adam_update(params.data(), state.m.data(),
                                    state.v.data(), grad.data(), params.size(),
                                    state.lr, state.beta1, state.beta2,
                                    state.eps, bc1_inv, bc2_inv);
  if (bad != 0)
    throw std::runtime_error("adam_step: update produced non-finite parameters");
}

namespace {
double projection_error(const ParamSet& params, const std::vector<double>& input,
                        const std::vector<double>& upstream,
                        const ParamSet& candidate_grad, rng::RngStream& rng,
                        int projections, double h) {
  const std::size_t n = params.size();
  auto value = [&](const ParamSet& p) {
    const std::vector<double> out = forward(p, input);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += upstream[i] * out[i];
    return s;
  };

  double worst = 0.0;
  ParamSet shifted = params;
  for (int j = 0; j < projections; ++j) {
    std::vector<double> dir(n);
    double norm = 0.0;
    for (auto& d : dir) {
      d = rng.normal();
      norm += d * d;
    }
    norm = std::sqrt(norm);
    for (auto& d : dir) d /= norm;

    for (std::size_t i = 0; i < n; ++i)
      shifted.flat()[i] = params.flat()[i] + h * dir[i];
    const double fp = value(shifted);
    for (std::size_t i = 0; i < n; ++i)
      shifted.flat()[i] = params.flat()[i] - h * dir[i];
    const double fm = value(shifted);

    const double fd = (fp - fm) / (2.0 * h);
    double an = 0.0;
    for (std::size_t i = 0; i < n; ++i) an += candidate_grad.flat()[i] * dir[i];

    const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-12});
    worst = std::max(worst, std::fabs(fd - an) / denom);
  }
  return worst;
}
}  // namespace

double finite_diff_error(const ParamSet& params,
                         const std::vector<double>& input,
                         const std::vector<double>& upstream,
                         const ParamSet& candidate_grad, rng::RngStream& rng,
                         int projections, double h) {
  return projection_error(params, input, upstream, candidate_grad, rng,
                          projections, h);
}

double finite_diff_check(const ParamSet& params,
                         const std::vector<double>& input,
                         rng::RngStream& rng, int projections, double h) {
  std::vector<double> upstream(params.spec().output_dim());
  for (auto& u : upstream) u = rng.normal();
  ParamSet grad(params.spec());
  gradients(params, input, upstream, grad);
  return projection_error(params, input, upstream, grad, rng, projections, h);
}

namespace {
constexpr char kMagic[8] = {'D', 'T', 'S', 'N', 'E', 'T', '0', '1'};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
}  // namespace

void save_params(const std::string& path, const ParamSet& params) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("save_params: cannot open " + path);
  std::fwrite(kMagic, 1, sizeof(kMagic), f.get());
  const std::uint32_t count = params.spec().sizes.size();
  std::fwrite(&count, sizeof(count), 1, f.get());
  for (int s : params.spec().sizes) {
    const std::uint32_t v = s;
    std::fwrite(&v, sizeof(v), 1, f.get());
  }
  const std::size_t written =
      std::fwrite(params.data(), sizeof(double), params.size(), f.get());
  if (written != params.size())
    throw std::runtime_error("save_params: short write to " + path);
}

ParamSet load_params(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("load_params: cannot open " + path);
  char magic[8];
  if (std::fread(magic, 1, sizeof(magic), f.get()) != sizeof(magic) ||
      std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_params: bad header in " + path);
  std::uint32_t count = 0;
  if (std::fread(&count, sizeof(count), 1, f.get()) != 1 || count < 2 ||
      count > 64)
    throw std::runtime_error("load_params: bad layer count in " + path);
  MlpSpec spec;
  spec.sizes.resize(count);
  for (auto& s : spec.sizes) {
    std::uint32_t v = 0;
    if (std::fread(&v, sizeof(v), 1, f.get()) != 1 || v == 0)
      throw std::runtime_error("load_params: bad layer size in " + path);
    s = static_cast<int>(v);
  }
  ParamSet p(spec);
  if (std::fread(p.data(), sizeof(double), p.size(), f.get()) != p.size())
    throw std::runtime_error("load_params: truncated parameters in " + path);
  return p;
}

}  // namespace dtsync::nn
