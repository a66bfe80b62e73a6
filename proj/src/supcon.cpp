// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "hapcap/error.hpp"
#include "hapcap/training.hpp"

namespace hapcap {

namespace {

// Columns of z are items. Returns the loss and, if requested, dL/dz.
SupConValue supcon_matrix(const Eigen::MatrixXd& z, std::span<const int> classes,
                          double tau, Eigen::MatrixXd* grad) {
  if (!(tau > 0.0)) throw InvalidInput(fmt::format("tau must be positive, got {}", tau));
  const Eigen::Index m = z.cols();
  if (static_cast<std::size_t>(m) != classes.size()) {
    throw InvalidInput("one class per batch item is required");
  }
  if (m < 2) throw InvalidInput("a contrastive batch needs at least 2 items");

  const Eigen::MatrixXd s = (z.transpose() * z) / tau;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  SupConValue out;
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    std::size_t positives = 0;
    double max_s = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < m; ++a) {
      if (a == i) continue;
      if (classes[a] == classes[i]) ++positives;
      max_s = std::max(max_s, s(i, a));
    }
    if (positives == 0) continue;
    ++out.anchors;
    double denom = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (a != i) denom += std::exp(s(i, a) - max_s);
    }
    const double log_denom = max_s + std::log(denom);
    const double inv_p = 1.0 / static_cast<double>(positives);
    double li = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (a == i) continue;
      const bool pos = classes[a] == classes[i];
      if (pos) li -= inv_p * (s(i, a) - log_denom);
      g(i, a) = std::exp(s(i, a) - log_denom) - (pos ? inv_p : 0.0);
    }
    total += li;
  }
  if (out.anchors == 0) {
    if (grad) *grad = Eigen::MatrixXd::Zero(z.rows(), m);
    return out;
  }
  const double inv_a = 1.0 / static_cast<double>(out.anchors);
  out.loss = total * inv_a;
  if (grad) *grad = z * (g + g.transpose()) * (inv_a / tau);
  return out;
}

Eigen::MatrixXd stack_columns(std::span<const Eigen::VectorXd> z) {
  if (z.empty()) return {};
  const Eigen::Index dim = z.front().size();
  Eigen::MatrixXd out(dim, static_cast<Eigen::Index>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i].size() != dim) {
      throw InvalidInput(fmt::format("batch item {} has dimension {}, expected {}", i,
                                     z[i].size(), dim));
    }
    out.col(static_cast<Eigen::Index>(i)) = z[i];
  }
  return out;
}

std::vector<int> class_ids(std::span<const PairLabel> labels) {
  std::map<PairLabel, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
  }
  return out;
}

struct TowerCache {
  std::vector<Eigen::MatrixXd> inputs;  // input of each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  Eigen::MatrixXd output;
};

TowerCache forward_tower(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x) {
  TowerCache cache;
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (h.rows() != layers[l].weight.cols()) {
      throw InvalidInput(fmt::format("layer {} expects input {}, got {}", l,
                                     layers[l].weight.cols(), h.rows()));
    }
    Eigen::MatrixXd pre = layers[l].weight * h;
    pre.colwise() += layers[l].bias.col(0);
    cache.inputs.push_back(std::move(h));
    h = (l + 1 == layers.size()) ? pre : Eigen::MatrixXd(pre.cwiseMax(0.0));
    cache.pre.push_back(std::move(pre));
  }
  cache.output = std::move(h);
  return cache;
}

struct Projected {
  Eigen::MatrixXd v;      // projection output, d x B
  Eigen::MatrixXd u;      // column-normalized v
  Eigen::VectorXd norms;  // |v| per column
};

Projected project_columns(const Eigen::MatrixXd& proj, const Eigen::MatrixXd& y) {
  Projected p;
  p.v = proj * y;
  p.u = p.v;
  p.norms = p.v.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < p.v.cols(); ++c) {
    if (p.norms(c) == 0.0) {
      p.u.col(c).setZero();
      if (p.u.rows() > 0) p.u(0, c) = 1.0;
    } else {
      p.u.col(c) /= p.norms(c);
    }
  }
  return p;
}

Eigen::MatrixXd normalize_backward(const Projected& p, const Eigen::MatrixXd& du) {
  Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(du.rows(), du.cols());
  for (Eigen::Index c = 0; c < du.cols(); ++c) {
    if (p.norms(c) == 0.0) continue;
    const auto u = p.u.col(c);
    dv.col(c) = (du.col(c) - u * u.dot(du.col(c))) / p.norms(c);
  }
  return dv;
}

// Gradients of the top `trainable` layers, keyed like parameters().
void backward_tower(std::span<const DenseLayer> layers, const TowerCache& cache,
                    Eigen::MatrixXd d_out, int trainable, const std::string& name,
                    std::map<std::string, Eigen::MatrixXd>& grads) {
  const int depth = static_cast<int>(layers.size());
  const int lowest = depth - trainable;
  Eigen::MatrixXd d_pre = std::move(d_out);  // top layer is linear
  for (int l = depth - 1; l >= lowest; --l) {
    grads[fmt::format("{}.dense{}.weight", name, l)] = d_pre * cache.inputs[l].transpose();
    grads[fmt::format("{}.dense{}.bias", name, l)] = d_pre.rowwise().sum();
    if (l == lowest) break;
    Eigen::MatrixXd d_h = layers[l].weight.transpose() * d_pre;
    d_pre = d_h.cwiseProduct(
        (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
}

struct ForwardPass {
  TowerCache text;
  TowerCache haptic;
  Projected pt;
  Projected ph;
  Eigen::MatrixXd z;
  std::vector<int> classes;
};

ForwardPass forward(const EncoderState& state, const TrainingBatch& batch,
                    PairRepresentation rep) {
  const std::size_t b = batch.size();
  if (batch.token_ids.size() != b || batch.haptic_inputs.size() != b) {
    throw InvalidInput("training batch fields have different lengths");
  }
  if (b == 0) throw InvalidInput("empty training batch");
  const auto bi = static_cast<Eigen::Index>(b);
  Eigen::MatrixXd xt(state.dims.embed_dim, bi);
  Eigen::MatrixXd xh(state.dims.haptic_input, bi);
  for (std::size_t i = 0; i < b; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    xt.col(c) = text_input(state, batch.token_ids[i]);
    if (batch.haptic_inputs[i].size() != xh.rows()) {
      throw InvalidInput(fmt::format("haptic input {} has dimension {}, expected {}", i,
                                     batch.haptic_inputs[i].size(), xh.rows()));
    }
    xh.col(c) = batch.haptic_inputs[i];
  }
  ForwardPass f;
  f.text = forward_tower(state.text_layers, xt);
  f.haptic = forward_tower(state.haptic_layers, xh);
  f.pt = project_columns(state.proj_text, f.text.output);
  f.ph = project_columns(state.proj_haptic, f.haptic.output);
  const auto pair_classes = class_ids(batch.labels);
  const Eigen::Index d = state.dims.d;
  if (rep == PairRepresentation::kViews) {
    f.z.resize(d, 2 * bi);
    f.z.leftCols(bi) = f.ph.u;
    f.z.rightCols(bi) = f.pt.u;
    f.classes = pair_classes;
    f.classes.insert(f.classes.end(), pair_classes.begin(), pair_classes.end());
  } else {
    f.z.resize(2 * d, bi);
    f.z.topRows(d) = f.ph.u;
    f.z.bottomRows(d) = f.pt.u;
    f.classes = pair_classes;
  }
  return f;
}

}  // namespace

SupConValue supcon_value(std::span<const Eigen::VectorXd> z,
                         std::span<const int> classes, double tau,
                         std::vector<Eigen::VectorXd>* grad) {
  Eigen::MatrixXd g;
  const auto out = supcon_matrix(stack_columns(z), classes, tau, grad ? &g : nullptr);
  if (grad) {
    grad->clear();
    for (Eigen::Index c = 0; c < g.cols(); ++c) grad->push_back(g.col(c));
  }
  return out;
}

double supcon_loss(const PairEmbeddingBatch& batch, double tau) {
  if (batch.z.size() != batch.labels.size()) {
    throw InvalidInput("one label per batch item is required");
  }
  const auto classes = class_ids(batch.labels);
  const auto out = supcon_value(batch.z, classes, tau);
  if (out.anchors == 0) {
    std::cerr << "warning: contrastive batch has no positive pairs; loss is 0\n";
  }
  return out.loss;
}

const Eigen::MatrixXd* GradientSet::find(const std::string& name) const {
  for (const auto& [n, g] : tensors) {
    if (n == name) return &g;
  }
  return nullptr;
}

TrainingBatch make_batch(const EncoderState& state,
                         std::span<const HapticTextPair> pairs,
                         std::span<const std::size_t> indices,
                         const HapticInputs& haptics) {
  TrainingBatch batch;
  for (std::size_t idx : indices) {
    const auto& p = pairs[idx];
    const auto it = haptics.find(p.signal_id);
    if (it == haptics.end()) {
      throw InvalidInput("no haptic input for signal '" + p.signal_id + "'");
    }
    batch.token_ids.push_back(state.vocab.encode(p.caption.text));
    batch.haptic_inputs.push_back(it->second);
    batch.labels.push_back(p.label);
  }
  return batch;
}

double batch_loss(const EncoderState& state, const TrainingBatch& batch, double tau,
                  PairRepresentation rep) {
  const auto f = forward(state, batch, rep);
  return supcon_matrix(f.z, f.classes, tau, nullptr).loss;
}

LossGradients loss_gradients(const EncoderState& state, const TrainingBatch& batch,
                             double tau, PairRepresentation rep) {
  LossGradients out;
  const auto f = forward(state, batch, rep);
  const bool text_on = state.text_trainable > 0;
  const bool haptic_on = state.haptic_trainable > 0;
  Eigen::MatrixXd dz;
  out.loss = supcon_matrix(f.z, f.classes, tau, &dz).loss;
  if (!text_on && !haptic_on) return out;

  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index d = state.dims.d;
  Eigen::MatrixXd duh, dut;
  if (rep == PairRepresentation::kViews) {
    duh = dz.leftCols(b);
    dut = dz.rightCols(b);
  } else {
    duh = dz.topRows(d);
    dut = dz.bottomRows(d);
  }

  std::map<std::string, Eigen::MatrixXd> grads;
  if (text_on) {
    const Eigen::MatrixXd dv = normalize_backward(f.pt, dut);
    grads["text.proj"] = dv * f.text.output.transpose();
    backward_tower(state.text_layers, f.text, state.proj_text.transpose() * dv,
                   state.text_trainable, "text", grads);
  }
  if (haptic_on) {
    const Eigen::MatrixXd dv = normalize_backward(f.ph, duh);
    grads["haptic.proj"] = dv * f.haptic.output.transpose();
    backward_tower(state.haptic_layers, f.haptic, state.proj_haptic.transpose() * dv,
                   state.haptic_trainable, "haptic", grads);
  }
  for (const auto& p : parameters(state)) {
    if (!p.trainable) continue;
    auto it = grads.find(p.name);
    if (it == grads.end()) throw std::logic_error("missing gradient for " + p.name);
    out.gradients.tensors.emplace_back(p.name, std::move(it->second));
  }
  return out;
}

}  // namespace hapcap
