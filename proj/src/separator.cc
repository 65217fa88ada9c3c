// src/separator.cc

// Copyright 2026  tsmix authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "tsmix/separator.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "tsmix/error.h"
#include "tsmix/parallel.h"
#include "tsmix/rng.h"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace tsmix {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Everything the backward pass needs from one forward run. Activations are
// frame-major: enc[f*N + n], hidden[f*H + h], masks[f*M*N + m*N + n].
struct Trace {
  std::size_t in_len = 0;
  std::size_t padded_len = 0;
  int frames = 0;
  std::vector<double> padded;
  std::vector<double> enc_pre;
  std::vector<double> enc_act;
  std::vector<std::vector<double>> hid_pre;
  std::vector<std::vector<double>> hid_act;
  std::vector<double> logits;
  std::vector<double> masks;
  std::vector<double> masked;   // mask * enc_act, frame-major M*N per frame
  std::vector<double> decoded;  // M x padded_len, channel-major
  std::vector<double> outputs;  // M x in_len, channel-major, post projection
};

void run_forward(const SeparatorParams& params, const SeparatorConfig& config,
                 const std::vector<double>& x, Trace* tr) {
  const ParamLayout layout = ParamLayout::from_config(config);
  if (params.values.size() != layout.total) {
    raise(ErrorKind::invalid_argument,
          "forward: parameter count " + std::to_string(params.values.size()) +
              " does not match config (expected " +
              std::to_string(layout.total) + ")");
  }
  const int n_filters = config.num_filters;
  const int klen = config.kernel_len;
  const int stride = config.stride;
  const int m_out = config.num_outputs;
  const std::size_t t_len = x.size();
  if (t_len < static_cast<std::size_t>(klen)) {
    raise(ErrorKind::invalid_argument,
          "forward: input length " + std::to_string(t_len) +
              " is shorter than kernel_len " + std::to_string(klen));
  }

  const int frames =
      1 + static_cast<int>((t_len - static_cast<std::size_t>(klen) +
                            static_cast<std::size_t>(stride) - 1) /
                           static_cast<std::size_t>(stride));
  const std::size_t padded_len =
      static_cast<std::size_t>(frames - 1) * static_cast<std::size_t>(stride) +
      static_cast<std::size_t>(klen);

  tr->in_len = t_len;
  tr->padded_len = padded_len;
  tr->frames = frames;
  tr->padded.assign(padded_len, 0.0);
  std::copy(x.begin(), x.end(), tr->padded.begin());

  const double* enc = params.values.data() + layout.encoder_offset;
  const double* dec = params.values.data() + layout.decoder_offset;
  const std::size_t fn = static_cast<std::size_t>(frames) *
                         static_cast<std::size_t>(n_filters);
  tr->enc_pre.assign(fn, 0.0);
  tr->enc_act.assign(fn, 0.0);
  for (int f = 0; f < frames; ++f) {
    const double* seg = tr->padded.data() +
                        static_cast<std::size_t>(f) * static_cast<std::size_t>(stride);
    double* pre = tr->enc_pre.data() +
                  static_cast<std::size_t>(f) * static_cast<std::size_t>(n_filters);
    for (int n = 0; n < n_filters; ++n) {
      const double* w = enc + static_cast<std::size_t>(n) * static_cast<std::size_t>(klen);
      double acc = 0.0;
      for (int l = 0; l < klen; ++l) acc += w[l] * seg[l];
      pre[n] = acc;
    }
  }
  for (std::size_t i = 0; i < fn; ++i) {
    tr->enc_act[i] = tr->enc_pre[i] > 0.0 ? tr->enc_pre[i] : 0.0;
  }

  // Frame-wise MLP. The last layout.masker entry is the mask head.
  const std::size_t num_hidden = layout.masker.size() - 1;
  tr->hid_pre.assign(num_hidden, {});
  tr->hid_act.assign(num_hidden, {});
  const double* pvals = params.values.data();
  const double* cur = tr->enc_act.data();
  std::size_t cur_dim = static_cast<std::size_t>(n_filters);
  for (std::size_t layer = 0; layer < num_hidden; ++layer) {
    const ParamLayout::Linear& lin = layout.masker[layer];
    const std::size_t out_dim = static_cast<std::size_t>(lin.out_dim);
    tr->hid_pre[layer].assign(static_cast<std::size_t>(frames) * out_dim, 0.0);
    tr->hid_act[layer].assign(static_cast<std::size_t>(frames) * out_dim, 0.0);
    for (int f = 0; f < frames; ++f) {
      const double* in = cur + static_cast<std::size_t>(f) * cur_dim;
      double* pre = tr->hid_pre[layer].data() + static_cast<std::size_t>(f) * out_dim;
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double* w = pvals + lin.weight_offset + o * cur_dim;
        double acc = pvals[lin.bias_offset + o];
        for (std::size_t i = 0; i < cur_dim; ++i) acc += w[i] * in[i];
        pre[o] = acc;
      }
    }
    for (std::size_t i = 0; i < tr->hid_pre[layer].size(); ++i) {
      tr->hid_act[layer][i] =
          tr->hid_pre[layer][i] > 0.0 ? tr->hid_pre[layer][i] : 0.0;
    }
    cur = tr->hid_act[layer].data();
    cur_dim = out_dim;
  }

  const ParamLayout::Linear& head = layout.masker.back();
  const std::size_t mask_dim = static_cast<std::size_t>(head.out_dim);  // M*N
  tr->logits.assign(static_cast<std::size_t>(frames) * mask_dim, 0.0);
  for (int f = 0; f < frames; ++f) {
    const double* in = cur + static_cast<std::size_t>(f) * cur_dim;
    double* lo = tr->logits.data() + static_cast<std::size_t>(f) * mask_dim;
    for (std::size_t o = 0; o < mask_dim; ++o) {
      const double* w = pvals + head.weight_offset + o * cur_dim;
      double acc = pvals[head.bias_offset + o];
      for (std::size_t i = 0; i < cur_dim; ++i) acc += w[i] * in[i];
      lo[o] = acc;
    }
  }
  tr->masks.assign(tr->logits.size(), 0.0);
  if (config.mask_activation == MaskActivation::sigmoid) {
    for (std::size_t i = 0; i < tr->logits.size(); ++i) {
      tr->masks[i] = sigmoid(tr->logits[i]);
    }
  } else {
    for (std::size_t i = 0; i < tr->logits.size(); ++i) {
      tr->masks[i] = tr->logits[i] > 0.0 ? tr->logits[i] : 0.0;
    }
  }

  tr->masked.assign(tr->masks.size(), 0.0);
  for (int f = 0; f < frames; ++f) {
    const double* e = tr->enc_act.data() +
                      static_cast<std::size_t>(f) * static_cast<std::size_t>(n_filters);
    const std::size_t base = static_cast<std::size_t>(f) * mask_dim;
    for (int m = 0; m < m_out; ++m) {
      for (int n = 0; n < n_filters; ++n) {
        const std::size_t idx =
            base + static_cast<std::size_t>(m) * static_cast<std::size_t>(n_filters) +
            static_cast<std::size_t>(n);
        tr->masked[idx] = tr->masks[idx] * e[n];
      }
    }
  }

  tr->decoded.assign(static_cast<std::size_t>(m_out) * padded_len, 0.0);
  for (int m = 0; m < m_out; ++m) {
    double* out = tr->decoded.data() + static_cast<std::size_t>(m) * padded_len;
    for (int f = 0; f < frames; ++f) {
      const double* r = tr->masked.data() +
                        static_cast<std::size_t>(f) * mask_dim +
                        static_cast<std::size_t>(m) * static_cast<std::size_t>(n_filters);
      double* seg = out + static_cast<std::size_t>(f) * static_cast<std::size_t>(stride);
      for (int n = 0; n < n_filters; ++n) {
        const double* w = dec + static_cast<std::size_t>(n) * static_cast<std::size_t>(klen);
        const double rv = r[n];
        if (rv == 0.0) continue;
        for (int l = 0; l < klen; ++l) seg[l] += w[l] * rv;
      }
    }
  }

  // Trim to the input length and, when configured, project onto the
  // mixture-consistency constraint.
  tr->outputs.assign(static_cast<std::size_t>(m_out) * t_len, 0.0);
  for (int m = 0; m < m_out; ++m) {
    const double* src = tr->decoded.data() + static_cast<std::size_t>(m) * padded_len;
    double* dst = tr->outputs.data() + static_cast<std::size_t>(m) * t_len;
    std::copy(src, src + t_len, dst);
  }
  if (config.mixture_consistency) {
    const double inv_m = 1.0 / static_cast<double>(m_out);
    for (std::size_t t = 0; t < t_len; ++t) {
      double sum = 0.0;
      for (int m = 0; m < m_out; ++m) {
        sum += tr->outputs[static_cast<std::size_t>(m) * t_len + t];
      }
      const double corr = (x[t] - sum) * inv_m;
      for (int m = 0; m < m_out; ++m) {
        tr->outputs[static_cast<std::size_t>(m) * t_len + t] += corr;
      }
    }
  }
}

// Accumulates d loss / d params into grad (+=). grad_out is channel-major
// M x in_len, the gradient at the network outputs (post projection).
void run_backward(const SeparatorParams& params, const SeparatorConfig& config,
                  const Trace& tr, const std::vector<double>& grad_out,
                  std::vector<double>& grad) {
  const ParamLayout layout = ParamLayout::from_config(config);
  const int n_filters = config.num_filters;
  const int klen = config.kernel_len;
  const int stride = config.stride;
  const int m_out = config.num_outputs;
  const std::size_t t_len = tr.in_len;
  const std::size_t padded_len = tr.padded_len;
  const int frames = tr.frames;
  const std::size_t mask_dim =
      static_cast<std::size_t>(m_out) * static_cast<std::size_t>(n_filters);

  // Projection Jacobian: g <- g - mean over channels (per sample).
  std::vector<double> g_trimmed(grad_out);
  if (config.mixture_consistency) {
    const double inv_m = 1.0 / static_cast<double>(m_out);
    for (std::size_t t = 0; t < t_len; ++t) {
      double mean = 0.0;
      for (int m = 0; m < m_out; ++m) {
        mean += grad_out[static_cast<std::size_t>(m) * t_len + t];
      }
      mean *= inv_m;
      for (int m = 0; m < m_out; ++m) {
        g_trimmed[static_cast<std::size_t>(m) * t_len + t] -= mean;
      }
    }
  }

  // Undo the trim: samples in [t_len, padded_len) received no loss.
  std::vector<double> g_decoded(static_cast<std::size_t>(m_out) * padded_len, 0.0);
  for (int m = 0; m < m_out; ++m) {
    std::copy(g_trimmed.begin() + static_cast<std::ptrdiff_t>(
                                      static_cast<std::size_t>(m) * t_len),
              g_trimmed.begin() + static_cast<std::ptrdiff_t>(
                                      static_cast<std::size_t>(m) * t_len + t_len),
              g_decoded.begin() + static_cast<std::ptrdiff_t>(
                                      static_cast<std::size_t>(m) * padded_len));
  }

  const double* dec = params.values.data() + layout.decoder_offset;
  double* g_dec = grad.data() + layout.decoder_offset;
  std::vector<double> g_masked(tr.masked.size(), 0.0);
  for (int m = 0; m < m_out; ++m) {
    const double* g_out_m =
        g_decoded.data() + static_cast<std::size_t>(m) * padded_len;
    for (int f = 0; f < frames; ++f) {
      const double* g_seg =
          g_out_m + static_cast<std::size_t>(f) * static_cast<std::size_t>(stride);
      const double* r = tr.masked.data() + static_cast<std::size_t>(f) * mask_dim +
                        static_cast<std::size_t>(m) * static_cast<std::size_t>(n_filters);
      double* g_r = g_masked.data() + static_cast<std::size_t>(f) * mask_dim +
                    static_cast<std::size_t>(m) * static_cast<std::size_t>(n_filters);
      for (int n = 0; n < n_filters; ++n) {
        const double* w = dec + static_cast<std::size_t>(n) * static_cast<std::size_t>(klen);
        double* gw = g_dec + static_cast<std::size_t>(n) * static_cast<std::size_t>(klen);
        double acc = 0.0;
        const double rv = r[n];
        for (int l = 0; l < klen; ++l) {
          acc += w[l] * g_seg[l];
          gw[l] += rv * g_seg[l];
        }
        g_r[n] = acc;
      }
    }
  }

  // Product rule at the mask: masked = mask * enc_act.
  std::vector<double> g_mask(tr.masks.size(), 0.0);
  std::vector<double> g_enc_act(tr.enc_act.size(), 0.0);
  for (int f = 0; f < frames; ++f) {
    const double* e = tr.enc_act.data() +
                      static_cast<std::size_t>(f) * static_cast<std::size_t>(n_filters);
    double* ge = g_enc_act.data() +
                 static_cast<std::size_t>(f) * static_cast<std::size_t>(n_filters);
    const std::size_t base = static_cast<std::size_t>(f) * mask_dim;
    for (int m = 0; m < m_out; ++m) {
      const std::size_t row =
          base + static_cast<std::size_t>(m) * static_cast<std::size_t>(n_filters);
      for (int n = 0; n < n_filters; ++n) {
        const double gr = g_masked[row + static_cast<std::size_t>(n)];
        g_mask[row + static_cast<std::size_t>(n)] = e[n] * gr;
        ge[n] += tr.masks[row + static_cast<std::size_t>(n)] * gr;
      }
    }
  }

  std::vector<double> g_logits(tr.logits.size(), 0.0);
  if (config.mask_activation == MaskActivation::sigmoid) {
    for (std::size_t i = 0; i < g_logits.size(); ++i) {
      const double s = tr.masks[i];
      g_logits[i] = s * (1.0 - s) * g_mask[i];
    }
  } else {
    for (std::size_t i = 0; i < g_logits.size(); ++i) {
      g_logits[i] = tr.logits[i] > 0.0 ? g_mask[i] : 0.0;
    }
  }

  // Masker backward, frame by frame.
  const std::size_t num_hidden = layout.masker.size() - 1;
  const ParamLayout::Linear& head = layout.masker.back();
  const double* pvals = params.values.data();
  std::vector<double> g_cur, g_prev;
  for (int f = 0; f < frames; ++f) {
    const std::size_t in_dim = static_cast<std::size_t>(head.in_dim);
    const double* in =
        num_hidden == 0
            ? tr.enc_act.data() + static_cast<std::size_t>(f) * in_dim
            : tr.hid_act[num_hidden - 1].data() + static_cast<std::size_t>(f) * in_dim;
    const double* g_lo = g_logits.data() + static_cast<std::size_t>(f) * mask_dim;
    g_cur.assign(in_dim, 0.0);
    for (std::size_t o = 0; o < mask_dim; ++o) {
      const double go = g_lo[o];
      if (go == 0.0) continue;
      const double* w = pvals + head.weight_offset + o * in_dim;
      double* gw = grad.data() + head.weight_offset + o * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) {
        g_cur[i] += w[i] * go;
        gw[i] += in[i] * go;
      }
      grad[head.bias_offset + o] += go;
    }

    for (std::size_t layer = num_hidden; layer-- > 0;) {
      const ParamLayout::Linear& lin = layout.masker[layer];
      const std::size_t odim = static_cast<std::size_t>(lin.out_dim);
      const std::size_t idim = static_cast<std::size_t>(lin.in_dim);
      const double* pre = tr.hid_pre[layer].data() + static_cast<std::size_t>(f) * odim;
      const double* lin_in =
          layer == 0
              ? tr.enc_act.data() +
                    static_cast<std::size_t>(f) * static_cast<std::size_t>(n_filters)
              : tr.hid_act[layer - 1].data() + static_cast<std::size_t>(f) * idim;
      g_prev.assign(idim, 0.0);
      for (std::size_t o = 0; o < odim; ++o) {
        double go = pre[o] > 0.0 ? g_cur[o] : 0.0;  // ReLU gate
        if (go == 0.0) continue;
        const double* w = pvals + lin.weight_offset + o * idim;
        double* gw = grad.data() + lin.weight_offset + o * idim;
        for (std::size_t i = 0; i < idim; ++i) {
          g_prev[i] += w[i] * go;
          gw[i] += lin_in[i] * go;
        }
        grad[lin.bias_offset + o] += go;
      }
      g_cur.swap(g_prev);
    }

    // g_cur now holds the masker-input gradient for this frame.
    double* ge = g_enc_act.data() +
                 static_cast<std::size_t>(f) * static_cast<std::size_t>(n_filters);
    for (int n = 0; n < n_filters; ++n) ge[n] += g_cur[static_cast<std::size_t>(n)];
  }

  // Encoder: ReLU gate then correlate with the framed input.
  double* g_enc = grad.data() + layout.encoder_offset;
  for (int f = 0; f < frames; ++f) {
    const double* seg = tr.padded.data() +
                        static_cast<std::size_t>(f) * static_cast<std::size_t>(stride);
    const std::size_t base =
        static_cast<std::size_t>(f) * static_cast<std::size_t>(n_filters);
    for (int n = 0; n < n_filters; ++n) {
      if (tr.enc_pre[base + static_cast<std::size_t>(n)] <= 0.0) continue;
      const double gp = g_enc_act[base + static_cast<std::size_t>(n)];
      if (gp == 0.0) continue;
      double* gw = g_enc + static_cast<std::size_t>(n) * static_cast<std::size_t>(klen);
      for (int l = 0; l < klen; ++l) gw[l] += gp * seg[l];
    }
  }
}

SourceStack outputs_to_stack(const Trace& tr, int m_out, int sample_rate) {
  std::vector<Waveform> out;
  out.reserve(static_cast<std::size_t>(m_out));
  for (int m = 0; m < m_out; ++m) {
    out.emplace_back(
        std::vector<double>(
            tr.outputs.begin() + static_cast<std::ptrdiff_t>(
                                     static_cast<std::size_t>(m) * tr.in_len),
            tr.outputs.begin() + static_cast<std::ptrdiff_t>(
                                     static_cast<std::size_t>(m) * tr.in_len +
                                     tr.in_len)),
        sample_rate);
  }
  return SourceStack(std::move(out));
}

struct ExampleResult {
  double loss_db = 0.0;
  std::vector<double> grads;
};

}  // namespace

void SeparatorConfig::validate() const {
  if (num_filters < 1 || kernel_len < 1 || stride < 1 || hidden_dim < 1 ||
      num_hidden_layers < 0 || num_outputs < 1) {
    raise(ErrorKind::config, "SeparatorConfig: all dimensions must be >= 1");
  }
  if (stride > kernel_len) {
    raise(ErrorKind::config,
          "SeparatorConfig: stride " + std::to_string(stride) +
              " exceeds kernel_len " + std::to_string(kernel_len));
  }
}

ParamLayout ParamLayout::from_config(const SeparatorConfig& config) {
  config.validate();
  ParamLayout layout;
  std::size_t off = 0;
  const std::size_t enc_size = static_cast<std::size_t>(config.num_filters) *
                               static_cast<std::size_t>(config.kernel_len);
  layout.encoder_offset = off;
  off += enc_size;
  int in_dim = config.num_filters;
  for (int layer = 0; layer < config.num_hidden_layers; ++layer) {
    Linear lin;
    lin.out_dim = config.hidden_dim;
    lin.in_dim = in_dim;
    lin.weight_offset = off;
    off += static_cast<std::size_t>(lin.out_dim) * static_cast<std::size_t>(lin.in_dim);
    lin.bias_offset = off;
    off += static_cast<std::size_t>(lin.out_dim);
    layout.masker.push_back(lin);
    in_dim = config.hidden_dim;
  }
  Linear head;
  head.out_dim = config.num_outputs * config.num_filters;
  head.in_dim = in_dim;
  head.weight_offset = off;
  off += static_cast<std::size_t>(head.out_dim) * static_cast<std::size_t>(head.in_dim);
  head.bias_offset = off;
  off += static_cast<std::size_t>(head.out_dim);
  layout.masker.push_back(head);
  layout.decoder_offset = off;
  off += enc_size;
  layout.total = off;
  return layout;
}

SeparatorParams init_params(const SeparatorConfig& config) {
  const ParamLayout layout = ParamLayout::from_config(config);
  SeparatorParams params;
  params.values.assign(layout.total, 0.0);
  Rng rng(config.seed);
  auto fill_uniform = [&](std::size_t offset, std::size_t count, int fan_in) {
    const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) {
      params.values[offset + i] = rng.uniform(-a, a);
    }
  };
  const std::size_t enc_size = static_cast<std::size_t>(config.num_filters) *
                               static_cast<std::size_t>(config.kernel_len);
  fill_uniform(layout.encoder_offset, enc_size, config.kernel_len);
  for (const ParamLayout::Linear& lin : layout.masker) {
    fill_uniform(lin.weight_offset,
                 static_cast<std::size_t>(lin.out_dim) *
                     static_cast<std::size_t>(lin.in_dim),
                 lin.in_dim);
    // biases stay zero
  }
  fill_uniform(layout.decoder_offset, enc_size, config.num_filters);
  return params;
}

SourceStack forward(const SeparatorParams& params,
                    const SeparatorConfig& config, const Waveform& mixture) {
  Trace tr;
  run_forward(params, config, mixture.samples(), &tr);
  return outputs_to_stack(tr, config.num_outputs, mixture.sample_rate());
}

SourceStack mixture_consistency_project(const SourceStack& initial,
                                        const Waveform& mixture) {
  if (initial.length() != mixture.size()) {
    raise(ErrorKind::invalid_argument,
          "mixture_consistency_project: length mismatch");
  }
  const std::size_t t_len = mixture.size();
  const std::size_t m = initial.count();
  std::vector<double> residual(mixture.samples());
  for (std::size_t j = 0; j < m; ++j) {
    const std::vector<double>& s = initial[j].samples();
    for (std::size_t t = 0; t < t_len; ++t) residual[t] -= s[t];
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<Waveform> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> s(initial[j].samples());
    for (std::size_t t = 0; t < t_len; ++t) s[t] += residual[t] * inv_m;
    out.emplace_back(std::move(s), mixture.sample_rate());
  }
  return SourceStack(std::move(out));
}

namespace {

// Shared batch driver: fn computes one example, results reduce in index
// order so the outcome is independent of num_threads.
LossGrad reduce_batch(std::size_t batch_size, std::size_t num_params,
                      int num_threads,
                      const std::function<void(std::size_t, ExampleResult&)>& fn) {
  if (batch_size == 0) {
    raise(ErrorKind::invalid_argument, "loss_and_grad: empty batch");
  }
  std::vector<ExampleResult> results(batch_size);
  parallel_for(batch_size, num_threads, [&](std::size_t i) {
    results[i].grads.assign(num_params, 0.0);
    fn(i, results[i]);
  });
  LossGrad out;
  out.loss_db = 0.0;
  out.grads.assign(num_params, 0.0);
  for (std::size_t i = 0; i < batch_size; ++i) {
    if (!std::isfinite(results[i].loss_db)) {
      raise(ErrorKind::numeric,
            "loss_and_grad: non-finite loss at batch example " +
                std::to_string(i));
    }
    out.loss_db += results[i].loss_db;
    for (std::size_t p = 0; p < num_params; ++p) {
      out.grads[p] += results[i].grads[p];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch_size);
  out.loss_db *= inv;
  for (double& g : out.grads) g *= inv;
  return out;
}

}  // namespace

LossGrad loss_and_grad(const SeparatorParams& params,
                       const SeparatorConfig& config,
                       const std::vector<MixitExample>& batch,
                       const LossSpec& spec, int num_threads) {
  const ParamLayout layout = ParamLayout::from_config(config);
  if (config.num_outputs < 2) {
    raise(ErrorKind::invalid_argument,
          "loss_and_grad(mixit): requires M >= 2");
  }
  return reduce_batch(
      batch.size(), layout.total, num_threads,
      [&](std::size_t i, ExampleResult& res) {
        const MixitExample& ex = batch[i];
        if (ex.x1.size() != ex.x2.size()) {
          raise(ErrorKind::invalid_argument,
                "loss_and_grad(mixit): x1/x2 length mismatch at example " +
                    std::to_string(i));
        }
        const std::size_t t_len = ex.x1.size();
        std::vector<double> xbar(t_len);
        for (std::size_t t = 0; t < t_len; ++t) xbar[t] = ex.x1[t] + ex.x2[t];
        Trace tr;
        run_forward(params, config, xbar, &tr);
        SourceStack ests =
            outputs_to_stack(tr, config.num_outputs, ex.x1.sample_rate());
        MixitResult assign = mixit_loss(ex.x1, ex.x2, ests, spec);
        res.loss_db = assign.total_loss_db;

        std::vector<double> g_row0(t_len), g_row1(t_len);
        loss_value_grad(ex.x1.samples(), assign.remixed[0].samples(), spec,
                        g_row0);
        loss_value_grad(ex.x2.samples(), assign.remixed[1].samples(), spec,
                        g_row1);
        std::vector<double> grad_out(
            static_cast<std::size_t>(config.num_outputs) * t_len);
        for (int m = 0; m < config.num_outputs; ++m) {
          const std::vector<double>& row =
              assign.assignment.assignment[static_cast<std::size_t>(m)] == 0
                  ? g_row0
                  : g_row1;
          std::copy(row.begin(), row.end(),
                    grad_out.begin() + static_cast<std::ptrdiff_t>(
                                           static_cast<std::size_t>(m) * t_len));
        }
        run_backward(params, config, tr, grad_out, res.grads);
      });
}

LossGrad loss_and_grad(const SeparatorParams& params,
                       const SeparatorConfig& config,
                       const std::vector<PitExample>& batch,
                       const LossSpec& spec, int num_threads) {
  const ParamLayout layout = ParamLayout::from_config(config);
  return reduce_batch(
      batch.size(), layout.total, num_threads,
      [&](std::size_t i, ExampleResult& res) {
        const PitExample& ex = batch[i];
        if (static_cast<int>(ex.refs.count()) != config.num_outputs) {
          raise(ErrorKind::invalid_argument,
                "loss_and_grad(pit): reference count " +
                    std::to_string(ex.refs.count()) + " != M = " +
                    std::to_string(config.num_outputs) + " at example " +
                    std::to_string(i));
        }
        Trace tr;
        run_forward(params, config, ex.mixture.samples(), &tr);
        SourceStack ests =
            outputs_to_stack(tr, config.num_outputs, ex.mixture.sample_rate());
        PitResult assign = pit_loss(ex.refs, ests, spec);
        res.loss_db = assign.total_loss_db;

        const std::size_t t_len = ex.mixture.size();
        std::vector<double> grad_out(
            static_cast<std::size_t>(config.num_outputs) * t_len, 0.0);
        std::vector<double> g(t_len);
        for (std::size_t c = 0; c < ex.refs.count(); ++c) {
          const int j = assign.assignment.perm[c];
          loss_value_grad(ex.refs[c].samples(),
                          ests[static_cast<std::size_t>(j)].samples(), spec, g);
          std::copy(g.begin(), g.end(),
                    grad_out.begin() + static_cast<std::ptrdiff_t>(
                                           static_cast<std::size_t>(j) * t_len));
        }
        run_backward(params, config, tr, grad_out, res.grads);
      });
}

AdamState AdamState::init(std::size_t num_params, double lr_in) {
  AdamState s;
  s.step = 0;
  s.first_moment.assign(num_params, 0.0);
  s.second_moment.assign(num_params, 0.0);
  s.lr = lr_in;
  return s;
}

std::pair<SeparatorParams, AdamState> adam_step(const SeparatorParams& params,
                                                const std::vector<double>& grads,
                                                AdamState state) {
  const std::size_t n = params.values.size();
  if (grads.size() != n || state.first_moment.size() != n ||
      state.second_moment.size() != n) {
    raise(ErrorKind::invalid_argument,
          "adam_step: shape mismatch (params " + std::to_string(n) +
              ", grads " + std::to_string(grads.size()) + ", moments " +
              std::to_string(state.first_moment.size()) + ")");
  }
  SeparatorParams out = params;
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
    state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
    const double mhat = state.first_moment[i] / corr1;
    const double vhat = state.second_moment[i] / corr2;
    out.values[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  return {std::move(out), std::move(state)};
}

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'S', 'M', 'I', 'X', 'S', 'E', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T* v, const std::string& path) {
  in.read(reinterpret_cast<char*>(v), sizeof(T));
  if (!in) {
    raise(ErrorKind::io, "load_checkpoint: truncated file " + path);
  }
}

}  // namespace

void save_checkpoint(const SeparatorParams& params,
                     const SeparatorConfig& config, const std::string& path) {
  const ParamLayout layout = ParamLayout::from_config(config);
  if (params.values.size() != layout.total) {
    raise(ErrorKind::invalid_argument,
          "save_checkpoint: parameter count does not match config");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "save_checkpoint: cannot open " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::int32_t>(config.num_filters));
  write_pod(out, static_cast<std::int32_t>(config.kernel_len));
  write_pod(out, static_cast<std::int32_t>(config.stride));
  write_pod(out, static_cast<std::int32_t>(config.hidden_dim));
  write_pod(out, static_cast<std::int32_t>(config.num_hidden_layers));
  write_pod(out, static_cast<std::int32_t>(config.num_outputs));
  write_pod(out, static_cast<std::uint8_t>(config.mixture_consistency ? 1 : 0));
  write_pod(out, static_cast<std::uint8_t>(
                     config.mask_activation == MaskActivation::sigmoid ? 0 : 1));
  write_pod(out, static_cast<std::uint64_t>(config.seed));
  write_pod(out, static_cast<std::uint64_t>(params.values.size()));
  out.write(reinterpret_cast<const char*>(params.values.data()),
            static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  if (!out) raise(ErrorKind::io, "save_checkpoint: write failed for " + path);
}

std::pair<SeparatorParams, SeparatorConfig> load_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    raise(ErrorKind::io, "load_checkpoint: " + path + " is not a checkpoint");
  }
  std::uint32_t version = 0;
  read_pod(in, &version, path);
  if (version != kCheckpointVersion) {
    raise(ErrorKind::io, "load_checkpoint: unsupported format version " +
                             std::to_string(version) + " in " + path);
  }
  SeparatorConfig config;
  std::int32_t v = 0;
  read_pod(in, &v, path);
  config.num_filters = v;
  read_pod(in, &v, path);
  config.kernel_len = v;
  read_pod(in, &v, path);
  config.stride = v;
  read_pod(in, &v, path);
  config.hidden_dim = v;
  read_pod(in, &v, path);
  config.num_hidden_layers = v;
  read_pod(in, &v, path);
  config.num_outputs = v;
  std::uint8_t b = 0;
  read_pod(in, &b, path);
  config.mixture_consistency = b != 0;
  read_pod(in, &b, path);
  config.mask_activation = b == 0 ? MaskActivation::sigmoid : MaskActivation::relu;
  std::uint64_t seed = 0;
  read_pod(in, &seed, path);
  config.seed = seed;
  std::uint64_t count = 0;
  read_pod(in, &count, path);
  const ParamLayout layout = ParamLayout::from_config(config);
  if (count != layout.total) {
    raise(ErrorKind::io,
          "load_checkpoint: parameter count " + std::to_string(count) +
              " does not match the embedded config (expected " +
              std::to_string(layout.total) + ") in " + path);
  }
  SeparatorParams params;
  params.values.assign(count, 0.0);
  in.read(reinterpret_cast<char*>(params.values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) raise(ErrorKind::io, "load_checkpoint: truncated file " + path);
  in.peek();
  if (!in.eof()) {
    raise(ErrorKind::io, "load_checkpoint: trailing bytes in " + path);
  }
  for (double x : params.values) {
    if (!std::isfinite(x)) {
      raise(ErrorKind::numeric,
            "load_checkpoint: non-finite parameter in " + path);
    }
  }
  return {std::move(params), config};
}

}  // namespace tsmix
