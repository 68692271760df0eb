// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0

#include "poserefine/regressor.hpp"

#include <cmath>
#include <random>

#include "poserefine/error.hpp"

namespace poserefine {

std::string to_string(Pooling p) {
  return p == Pooling::kGlobalAverage ? "global_average" : "flatten";
}

Pooling pooling_from_string(const std::string& s) {
  if (s == "global_average") return Pooling::kGlobalAverage;
  if (s == "flatten") return Pooling::kFlatten;
  throw DataError("unknown pooling '" + s + "' (expected global_average|flatten)");
}

RegressorConfig default_regressor_config(int limb_count, int patch_res) {
  RegressorConfig cfg;
  cfg.input_channels = 6 * limb_count;
  cfg.output_dim = 3 * limb_count;
  cfg.patch_res = patch_res;
  return cfg;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

int conv_out_size(int in, const ConvSpec& spec) {
  const int pad = spec.kernel / 2;
  return (in + 2 * pad - spec.kernel) / spec.stride + 1;
}

struct ConvGeom {
  int in_channels, in_res, out_channels, out_res, kernel, stride, pad;
  std::int64_t w_offset, b_offset;
};

struct FcGeom {
  int in, out;
  std::int64_t w_offset, b_offset;
};

// Resolved layer geometry for one config.
struct Network {
  std::vector<ConvGeom> convs;
  std::vector<FcGeom> fcs;
  int feature_channels = 0;
  int feature_res = 0;
  Pooling pooling = Pooling::kGlobalAverage;
  std::int64_t param_count = 0;
  std::vector<LayerShape> shapes;

  explicit Network(const RegressorConfig& cfg) {
    check_config(cfg);
    pooling = cfg.pooling;
    int channels = cfg.input_channels;
    int res = cfg.patch_res;
    std::int64_t offset = 0;
    auto add = [&](std::string name, std::vector<int> dims) {
      std::int64_t size = 1;
      for (int d : dims) size *= d;
      shapes.push_back({std::move(name), std::move(dims), offset, size});
      offset += size;
      return offset - size;
    };
    for (size_t i = 0; i < cfg.conv.size(); ++i) {
      const ConvSpec& spec = cfg.conv[i];
      ConvGeom g{};
      g.in_channels = channels;
      g.in_res = res;
      g.out_channels = spec.out_channels;
      g.out_res = conv_out_size(res, spec);
      g.kernel = spec.kernel;
      g.stride = spec.stride;
      g.pad = spec.kernel / 2;
      const std::string prefix = "conv" + std::to_string(i);
      g.w_offset = add(prefix + ".weight",
                       {spec.out_channels, channels, spec.kernel, spec.kernel});
      g.b_offset = add(prefix + ".bias", {spec.out_channels});
      convs.push_back(g);
      channels = g.out_channels;
      res = g.out_res;
    }
    feature_channels = channels;
    feature_res = res;
    int width = pooling == Pooling::kGlobalAverage ? channels : channels * res * res;
    std::vector<int> widths = cfg.fc_widths;
    widths.push_back(cfg.output_dim);
    for (size_t i = 0; i < widths.size(); ++i) {
      FcGeom g{};
      g.in = width;
      g.out = widths[i];
      const std::string prefix = "fc" + std::to_string(i);
      g.w_offset = add(prefix + ".weight", {g.out, g.in});
      g.b_offset = add(prefix + ".bias", {g.out});
      fcs.push_back(g);
      width = g.out;
    }
    param_count = offset;
  }
};

// im2col: rows (c, ky, kx), columns output positions (oy, ox).
void im2col(const double* input, const ConvGeom& g, RowMatrix& cols) {
  const int k = g.kernel;
  const int out_pixels = g.out_res * g.out_res;
  cols.resize(static_cast<Eigen::Index>(g.in_channels) * k * k, out_pixels);
  for (int c = 0; c < g.in_channels; ++c) {
    const double* plane = input + static_cast<std::int64_t>(c) * g.in_res * g.in_res;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((static_cast<std::int64_t>(c) * k + ky) * k + kx) * out_pixels;
        for (int oy = 0; oy < g.out_res; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          for (int ox = 0; ox < g.out_res; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            row[oy * g.out_res + ox] =
                (iy < 0 || ix < 0 || iy >= g.in_res || ix >= g.in_res)
                    ? 0.0
                    : plane[iy * g.in_res + ix];
          }
        }
      }
    }
  }
}

void col2im(const RowMatrix& dcols, const ConvGeom& g, double* dinput) {
  const int k = g.kernel;
  const int out_pixels = g.out_res * g.out_res;
  std::fill(dinput, dinput + static_cast<std::int64_t>(g.in_channels) * g.in_res * g.in_res, 0.0);
  for (int c = 0; c < g.in_channels; ++c) {
    double* plane = dinput + static_cast<std::int64_t>(c) * g.in_res * g.in_res;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row =
            dcols.data() + ((static_cast<std::int64_t>(c) * k + ky) * k + kx) * out_pixels;
        for (int oy = 0; oy < g.out_res; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_res) continue;
          for (int ox = 0; ox < g.out_res; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.in_res) continue;
            plane[iy * g.in_res + ix] += row[oy * g.out_res + ox];
          }
        }
      }
    }
  }
}

// Everything the backward pass needs from a forward pass.
struct Trace {
  std::vector<RowMatrix> cols;        // per conv layer
  std::vector<RowMatrix> conv_out;    // post-ReLU, (C_out, pixels)
  std::vector<Eigen::VectorXd> fc_in;  // input to each FC layer
  std::vector<Eigen::VectorXd> fc_out;  // post-activation output of each FC layer
};

Eigen::VectorXd run_forward(const Network& net, const Eigen::VectorXd& params,
                            std::span<const double> input, Trace& trace) {
  const double* p = params.data();
  trace.cols.resize(net.convs.size());
  trace.conv_out.resize(net.convs.size());
  const double* layer_in = input.data();
  for (size_t i = 0; i < net.convs.size(); ++i) {
    const ConvGeom& g = net.convs[i];
    im2col(layer_in, g, trace.cols[i]);
    ConstRowMap w(p + g.w_offset, g.out_channels,
                  static_cast<Eigen::Index>(g.in_channels) * g.kernel * g.kernel);
    Eigen::Map<const Eigen::VectorXd> b(p + g.b_offset, g.out_channels);
    RowMatrix& out = trace.conv_out[i];
    out.noalias() = w * trace.cols[i];
    out.colwise() += b;
    out = out.cwiseMax(0.0);
    layer_in = out.data();
  }

  Eigen::VectorXd x;
  if (net.convs.empty()) {
    x = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
    if (net.pooling == Pooling::kGlobalAverage) {
      const int pixels = static_cast<int>(input.size()) / net.feature_channels;
      x = ConstRowMap(input.data(), net.feature_channels, pixels).rowwise().mean();
    }
  } else {
    const RowMatrix& feat = trace.conv_out.back();
    if (net.pooling == Pooling::kGlobalAverage) {
      x = feat.rowwise().mean();
    } else {
      x = Eigen::Map<const Eigen::VectorXd>(feat.data(), feat.size());
    }
  }

  trace.fc_in.resize(net.fcs.size());
  trace.fc_out.resize(net.fcs.size());
  for (size_t i = 0; i < net.fcs.size(); ++i) {
    const FcGeom& g = net.fcs[i];
    ConstRowMap w(p + g.w_offset, g.out, g.in);
    Eigen::Map<const Eigen::VectorXd> b(p + g.b_offset, g.out);
    trace.fc_in[i] = x;
    Eigen::VectorXd y = w * x + b;
    if (i + 1 < net.fcs.size()) y = y.cwiseMax(0.0);
    trace.fc_out[i] = y;
    x = std::move(y);
  }
  return x;
}

void check_input(const Network& net, const RegressorConfig& cfg,
                 std::span<const double> input) {
  const auto expected = static_cast<size_t>(cfg.input_channels) * cfg.patch_res * cfg.patch_res;
  if (input.size() != expected) {
    throw DataError("regressor input has " + std::to_string(input.size()) +
                    " values, config expects " + std::to_string(expected));
  }
  (void)net;
}

std::span<const double> volume_span(const PatchVolume& volume, const RegressorConfig& cfg) {
  if (volume.channels != cfg.input_channels || volume.res != cfg.patch_res) {
    throw DataError("patch volume " + std::to_string(volume.channels) + "x" +
                    std::to_string(volume.res) + " does not match regressor config " +
                    std::to_string(cfg.input_channels) + "x" + std::to_string(cfg.patch_res));
  }
  return volume.values;
}

}  // namespace

void check_config(const RegressorConfig& cfg) {
  if (cfg.input_channels < 6 || cfg.input_channels % 6 != 0) {
    throw DataError("input_channels must be a positive multiple of 6");
  }
  if (cfg.output_dim != cfg.input_channels / 2) {
    throw DataError("output_dim must equal 3(N-1) = input_channels / 2");
  }
  if (cfg.patch_res < 1) throw DataError("patch_res must be >= 1");
  int res = cfg.patch_res;
  for (const ConvSpec& spec : cfg.conv) {
    if (spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1) {
      throw DataError("conv widths, kernels and strides must be >= 1");
    }
    res = conv_out_size(res, spec);
    if (res < 1) throw DataError("conv stack shrinks the patch below one pixel");
  }
  for (int w : cfg.fc_widths) {
    if (w < 1) throw DataError("fc widths must be >= 1");
  }
}

std::vector<LayerShape> layer_shapes(const RegressorConfig& cfg) {
  return Network(cfg).shapes;
}

RegressorParams init_params(const RegressorConfig& cfg) {
  const Network net(cfg);
  RegressorParams params;
  params.layers = net.shapes;
  params.values = Eigen::VectorXd::Zero(net.param_count);
  std::mt19937_64 rng(cfg.seed);
  for (const LayerShape& layer : params.layers) {
    if (layer.dims.size() < 2) continue;  // bias
    std::int64_t fan_in = 1;
    for (size_t d = 1; d < layer.dims.size(); ++d) fan_in *= layer.dims[d];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::int64_t i = 0; i < layer.size; ++i) {
      params.values[layer.offset + i] = dist(rng);
    }
  }
  return params;
}

void check_params(const RegressorParams& params, const RegressorConfig& cfg) {
  const Network net(cfg);
  if (params.version != kParamsVersion) {
    throw DataError("unsupported parameter version " + std::to_string(params.version));
  }
  if (params.values.size() != net.param_count) {
    throw DataError("parameter vector has " + std::to_string(params.values.size()) +
                    " values, config implies " + std::to_string(net.param_count));
  }
  if (!params.values.allFinite()) throw DataError("parameters contain non-finite values");
}

FlatResidual forward(const RegressorParams& params, const RegressorConfig& cfg,
                     std::span<const double> input) {
  const Network net(cfg);
  if (params.values.size() != net.param_count) {
    throw DataError("parameter vector does not match regressor config");
  }
  check_input(net, cfg, input);
  Trace trace;
  return FlatResidual{run_forward(net, params.values, input, trace)};
}

FlatResidual forward(const RegressorParams& params, const RegressorConfig& cfg,
                     const PatchVolume& volume) {
  return forward(params, cfg, volume_span(volume, cfg));
}

FlatResidual predict(const RegressorParams& params, const RegressorConfig& cfg,
                     const PatchVolume& volume) {
  return forward(params, cfg, volume);
}

double loss(const FlatResidual& pred, const FlatResidual& target) {
  if (pred.size() != target.size()) {
    throw DataError("loss: prediction length " + std::to_string(pred.size()) +
                    " != target length " + std::to_string(target.size()));
  }
  return (pred.values - target.values).squaredNorm();
}

LossGradient backward(const RegressorParams& params, const RegressorConfig& cfg,
                      std::span<const double> input, const FlatResidual& target) {
  const Network net(cfg);
  if (params.values.size() != net.param_count) {
    throw DataError("parameter vector does not match regressor config");
  }
  check_input(net, cfg, input);
  if (target.size() != cfg.output_dim) {
    throw DataError("target length does not match regressor output_dim");
  }
  Trace trace;
  const Eigen::VectorXd pred = run_forward(net, params.values, input, trace);
  const double* p = params.values.data();

  LossGradient out;
  out.loss = (pred - target.values).squaredNorm();
  out.grad = Eigen::VectorXd::Zero(net.param_count);
  double* gp = out.grad.data();

  Eigen::VectorXd dy = 2.0 * (pred - target.values);
  for (size_t ii = net.fcs.size(); ii-- > 0;) {
    const FcGeom& g = net.fcs[ii];
    if (ii + 1 < net.fcs.size()) {
      // ReLU: gradient flows only where the output was positive.
      dy = (trace.fc_out[ii].array() > 0.0).select(dy.array(), 0.0).matrix();
    }
    RowMap(gp + g.w_offset, g.out, g.in).noalias() = dy * trace.fc_in[ii].transpose();
    Eigen::Map<Eigen::VectorXd>(gp + g.b_offset, g.out) = dy;
    ConstRowMap w(p + g.w_offset, g.out, g.in);
    dy = w.transpose() * dy;
  }

  if (net.convs.empty()) return out;

  // dy is now the gradient w.r.t. the pooled features.
  const ConvGeom& last = net.convs.back();
  const int last_pixels = last.out_res * last.out_res;
  RowMatrix dact(last.out_channels, last_pixels);
  if (net.pooling == Pooling::kGlobalAverage) {
    for (int c = 0; c < last.out_channels; ++c) {
      dact.row(c).setConstant(dy[c] / last_pixels);
    }
  } else {
    dact = ConstRowMap(dy.data(), last.out_channels, last_pixels);
  }

  for (size_t ii = net.convs.size(); ii-- > 0;) {
    const ConvGeom& g = net.convs[ii];
    const Eigen::Index kdim = static_cast<Eigen::Index>(g.in_channels) * g.kernel * g.kernel;
    RowMatrix dpre = (trace.conv_out[ii].array() > 0.0).select(dact.array(), 0.0).matrix();
    RowMap(gp + g.w_offset, g.out_channels, kdim).noalias() =
        dpre * trace.cols[ii].transpose();
    Eigen::Map<Eigen::VectorXd>(gp + g.b_offset, g.out_channels) = dpre.rowwise().sum();
    if (ii == 0) break;
    ConstRowMap w(p + g.w_offset, g.out_channels, kdim);
    RowMatrix dcols = w.transpose() * dpre;
    dact.resize(g.in_channels, static_cast<Eigen::Index>(g.in_res) * g.in_res);
    col2im(dcols, g, dact.data());
  }
  return out;
}

LossGradient backward(const RegressorParams& params, const RegressorConfig& cfg,
                      const PatchVolume& volume, const FlatResidual& target) {
  return backward(params, cfg, volume_span(volume, cfg), target);
}

Eigen::VectorXd conv_features(const RegressorParams& params, const RegressorConfig& cfg,
                              const PatchVolume& volume) {
  const Network net(cfg);
  const auto input = volume_span(volume, cfg);
  if (params.values.size() != net.param_count) {
    throw DataError("parameter vector does not match regressor config");
  }
  Trace trace;
  run_forward(net, params.values, input, trace);
  if (trace.conv_out.empty()) return Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  const RowMatrix& feat = trace.conv_out.back();
  return Eigen::Map<const Eigen::VectorXd>(feat.data(), feat.size());
}

}  // namespace poserefine
