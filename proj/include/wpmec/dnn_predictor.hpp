#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "wpmec/instance_gen.hpp"
#include "wpmec/strategy_search.hpp"

namespace wpmec {

// One training sample: system state (w, h) and the PI-optimal cluster count.
struct Sample {
  Vec w;
  Vec h;
  int m_star = 0;
};

using Dataset = std::vector<Sample>;

// Per-feature affine map to zero mean / unit variance. Constant features get
// std 1 (passthrough) and are counted in constant_features.
struct Standardizer {
  Vec mean;
  Vec std_dev;
  int constant_features = 0;

  static Standardizer fit(const Mat& features) {
    Standardizer s;
    const int n = static_cast<int>(features.rows());
    s.mean = features.colwise().mean();
    Mat centered = features.rowwise() - s.mean.transpose();
    s.std_dev = (centered.array().square().colwise().sum() / n).sqrt();
    for (int j = 0; j < s.std_dev.size(); ++j) {
      if (s.std_dev[j] <= 0.0) {
        s.std_dev[j] = 1.0;
        ++s.constant_features;
      }
    }
    return s;
  }

  Vec apply(const Vec& x) const {
    if (x.size() != mean.size())
      throw std::invalid_argument("standardizer: feature size mismatch");
    return (x - mean).cwiseQuotient(std_dev);
  }

  Mat apply(const Mat& rows) const {
    if (rows.cols() != mean.size())
      throw std::invalid_argument("standardizer: feature size mismatch");
    return (rows.rowwise() - mean.transpose()).array().rowwise() /
           std_dev.transpose().array();
  }

  Vec inverse(const Vec& z) const {
    return z.cwiseProduct(std_dev) + mean;
  }
};

// Small feedforward softmax classifier: input 2N, ReLU hidden layers,
// floor(N/2)+1 outputs.
struct MlpModel {
  std::vector<int> sizes;  // [in, hidden..., out]
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  int inputs() const { return sizes.front(); }
  int outputs() const { return sizes.back(); }

  static MlpModel init(const std::vector<int>& sizes, std::uint64_t seed) {
    MlpModel m;
    m.sizes = sizes;
    Rng rng(mix_seed(seed, 0xD11));
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      double scale = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
      Mat w(sizes[l + 1], sizes[l]);
      for (int i = 0; i < w.rows(); ++i)
        for (int j = 0; j < w.cols(); ++j)
          w(i, j) = rng.uniform(-scale, scale);
      m.weights.push_back(std::move(w));
      m.biases.push_back(Vec::Zero(sizes[l + 1]));
    }
    return m;
  }

  Vec logits(const Vec& x) const {
    Vec a = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      a = weights[l] * a + biases[l];
      if (l + 1 < weights.size()) a = a.cwiseMax(0.0);
    }
    return a;
  }
};

inline Vec softmax(const Vec& z) {
  Vec e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

// Mean cross-entropy over a batch plus, optionally, parameter gradients.
inline double batch_loss(const MlpModel& model, const Mat& x_rows,
                         const std::vector<int>& labels,
                         std::vector<Mat>* grad_w = nullptr,
                         std::vector<Vec>* grad_b = nullptr) {
  const int batch = static_cast<int>(x_rows.rows());
  const std::size_t layers = model.weights.size();
  if (grad_w) {
    grad_w->clear();
    grad_b->clear();
    for (std::size_t l = 0; l < layers; ++l) {
      grad_w->push_back(Mat::Zero(model.weights[l].rows(), model.weights[l].cols()));
      grad_b->push_back(Vec::Zero(model.biases[l].size()));
    }
  }
  double loss = 0.0;
  for (int s = 0; s < batch; ++s) {
    std::vector<Vec> acts;  // post-activation per layer, acts[0] = input
    acts.push_back(x_rows.row(s).transpose());
    for (std::size_t l = 0; l < layers; ++l) {
      Vec z = model.weights[l] * acts.back() + model.biases[l];
      if (l + 1 < layers) z = z.cwiseMax(0.0);
      acts.push_back(std::move(z));
    }
    Vec p = softmax(acts.back());
    double py = std::max(p[labels[s]], 1e-300);
    loss += -std::log(py);
    if (!grad_w) continue;
    Vec delta = p;
    delta[labels[s]] -= 1.0;
    for (int l = static_cast<int>(layers) - 1; l >= 0; --l) {
      (*grad_w)[l] += delta * acts[l].transpose();
      (*grad_b)[l] += delta;
      if (l > 0) {
        delta = model.weights[l].transpose() * delta;
        for (int i = 0; i < delta.size(); ++i)
          if (acts[l][i] <= 0.0) delta[i] = 0.0;  // ReLU gate
      }
    }
  }
  loss /= batch;
  if (grad_w) {
    for (std::size_t l = 0; l < layers; ++l) {
      (*grad_w)[l] /= batch;
      (*grad_b)[l] /= batch;
    }
  }
  return loss;
}

// Max relative error between backprop and central finite differences, per
// layer, on a frozen batch.
inline std::vector<double> gradient_check(MlpModel model, const Mat& x_rows,
                                          const std::vector<int>& labels,
                                          double h = 1e-5) {
  std::vector<Mat> gw;
  std::vector<Vec> gb;
  batch_loss(model, x_rows, labels, &gw, &gb);
  std::vector<double> per_layer(model.weights.size(), 0.0);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    auto probe = [&](double* param, double analytic) {
      double saved = *param;
      *param = saved + h;
      double up = batch_loss(model, x_rows, labels);
      *param = saved - h;
      double dn = batch_loss(model, x_rows, labels);
      *param = saved;
      double fd = (up - dn) / (2.0 * h);
      double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
      per_layer[l] = std::max(per_layer[l], std::abs(fd - analytic) / denom);
    };
    for (int i = 0; i < model.weights[l].rows(); ++i)
      for (int j = 0; j < model.weights[l].cols(); ++j)
        probe(&model.weights[l](i, j), gw[l](i, j));
    for (int i = 0; i < model.biases[l].size(); ++i)
      probe(&model.biases[l][i], gb[l][i]);
  }
  return per_layer;
}

struct TrainOptions {
  std::vector<int> hidden = {64, 64};
  double learning_rate = 1e-2;
  int batch_size = 32;
  int epochs = 200;
  double validation_fraction = 0.2;
};

struct TrainedPredictor {
  MlpModel model;
  Standardizer standardizer;
  int n_devices = 0;
  int n_classes = 0;
  std::vector<double> train_loss_history;
  double best_validation_loss = std::numeric_limits<double>::infinity();
};

inline Mat feature_matrix(const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const int n = static_cast<int>(data.front().w.size());
  Mat x(data.size(), 2 * n);
  for (std::size_t i = 0; i < data.size(); ++i) {
    x.row(i).head(n) = data[i].w.transpose();
    x.row(i).tail(n) = data[i].h.transpose();
  }
  return x;
}

// SGD with cross-entropy loss; keeps the weights of the best validation-loss
// epoch. Deterministic under the seed (portable shuffles).
inline TrainedPredictor train(const Dataset& data, const TrainOptions& opt,
                              std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const int n_dev = static_cast<int>(data.front().w.size());
  const int n_classes = n_dev / 2 + 1;

  Mat features = feature_matrix(data);
  TrainedPredictor out;
  out.n_devices = n_dev;
  out.n_classes = n_classes;

  // split train/validation
  std::vector<int> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(seed, 0x7211));
  for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i) {
    int j = static_cast<int>(rng.below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  int n_val = static_cast<int>(data.size() * opt.validation_fraction);
  n_val = std::min<int>(std::max(n_val, 0), static_cast<int>(data.size()) - 1);
  std::vector<int> val_idx(perm.begin(), perm.begin() + n_val);
  std::vector<int> train_idx(perm.begin() + n_val, perm.end());

  Mat train_x(train_idx.size(), features.cols());
  std::vector<int> train_y(train_idx.size());
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    train_x.row(i) = features.row(train_idx[i]);
    train_y[i] = data[train_idx[i]].m_star;
  }
  out.standardizer = Standardizer::fit(train_x);
  Mat train_z = out.standardizer.apply(train_x);

  Mat val_z(val_idx.size(), features.cols());
  std::vector<int> val_y(val_idx.size());
  for (std::size_t i = 0; i < val_idx.size(); ++i) {
    val_z.row(i) =
        out.standardizer.apply(Vec(features.row(val_idx[i]).transpose()))
            .transpose();
    val_y[i] = data[val_idx[i]].m_star;
  }

  std::vector<int> sizes;
  sizes.push_back(2 * n_dev);
  for (int hsize : opt.hidden) sizes.push_back(hsize);
  sizes.push_back(n_classes);
  MlpModel model = MlpModel::init(sizes, seed);
  MlpModel best = model;

  const int n_train = static_cast<int>(train_idx.size());
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (int i = n_train - 1; i > 0; --i) {
      int j = static_cast<int>(rng.below(i + 1));
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    for (int start = 0; start < n_train; start += opt.batch_size) {
      int bs = std::min(opt.batch_size, n_train - start);
      Mat bx(bs, train_z.cols());
      std::vector<int> by(bs);
      for (int i = 0; i < bs; ++i) {
        bx.row(i) = train_z.row(order[start + i]);
        by[i] = train_y[order[start + i]];
      }
      std::vector<Mat> gw;
      std::vector<Vec> gb;
      double loss = batch_loss(model, bx, by, &gw, &gb);
      if (!std::isfinite(loss))
        throw std::runtime_error(
            "train: loss diverged (NaN); lower the learning rate");
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= opt.learning_rate * gw[l];
        model.biases[l] -= opt.learning_rate * gb[l];
      }
      epoch_loss += loss;
      ++batches;
    }
    out.train_loss_history.push_back(epoch_loss / std::max(batches, 1));

    double val_loss;
    if (!val_y.empty()) {
      val_loss = batch_loss(model, val_z, val_y);
    } else {
      val_loss = out.train_loss_history.back();
    }
    if (val_loss < out.best_validation_loss) {
      out.best_validation_loss = val_loss;
      best = model;
    }
  }
  out.model = std::move(best);
  return out;
}

// Class scores -> predicted cluster count; ties break to the smallest m.
inline int predict_m(const TrainedPredictor& pred, const Vec& w, const Vec& h) {
  if (w.size() != pred.n_devices || h.size() != pred.n_devices)
    throw std::invalid_argument("predict_m: feature length != N");
  Vec x(2 * pred.n_devices);
  x.head(pred.n_devices) = w;
  x.tail(pred.n_devices) = h;
  Vec z = pred.model.logits(pred.standardizer.apply(x));
  int best = 0;
  for (int c = 1; c < z.size(); ++c)
    if (z[c] > z[best]) best = c;  // strict: earliest max wins ties
  return best;
}

// One frame of the dataset template: geometry and CPU speeds from the
// template seed, fading and weights from the frame seed.
inline NetworkInstance make_frame(const InstanceConfig& cfg,
                                  std::uint64_t template_seed,
                                  std::uint64_t frame_seed) {
  Rng geo(mix_seed(template_seed, 1));
  Rng cpu(mix_seed(template_seed, 2));
  Rng wgt(mix_seed(frame_seed, 3));
  std::vector<DeviceParams> devices;
  devices.reserve(cfg.n_devices);
  for (int n = 0; n < cfg.n_devices; ++n) {
    DeviceParams d;
    d.index = n;
    double offset = geo.uniform(-cfg.distance_spread, cfg.distance_spread);
    d.distance = std::max(cfg.mean_distance + offset, 0.5);
    d.cpu_speed = cpu.uniform(cfg.cpu_speed_min, cfg.cpu_speed_max);
    d.weight = cfg.draws_weights() ? wgt.uniform(cfg.weight_min, cfg.weight_max)
                                   : cfg.weight_min;
    d.cycles_per_bit = cfg.cycles_per_bit;
    d.energy_coeff = cfg.energy_coeff;
    d.tx_power = cfg.tx_power;
    d.battery_cap = cfg.battery_cap;
    devices.push_back(d);
  }
  ChannelRealization ch = sample_channels(devices, cfg.hap, frame_seed, cfg.fading);
  return NetworkInstance(std::move(devices), cfg.hap, std::move(ch),
                         cfg.min_data_bits);
}

// Dataset generation (DL Steps 1-2): device population fixed by the template
// seed; each sample redraws fading (and weights when the config draws them),
// labels come from the priority-based search. Frames whose allocation LP is
// infeasible at every m are skipped, so exactly n_samples labelled samples
// come back. Deterministic under (cfg, seed).
inline Dataset generate_dataset(const InstanceConfig& cfg, int n_samples,
                                std::uint64_t seed,
                                const SolverOptions& solver_opt = {},
                                int threads = 0,
                                std::uint64_t frame_salt = 0xDA7A) {
  Dataset out;
  if (n_samples <= 0) return out;
  const int chunk = std::max(2 * n_samples, 16);
  std::vector<Sample> samples(chunk);
  std::vector<char> keep(chunk, 0);
  int produced = 0;
  std::uint64_t round = 0;
  while (produced < n_samples && round < 64) {
    parallel_for(
        chunk,
        [&](int t) {
          std::uint64_t frame_seed =
              mix_seed(seed, frame_salt + round * chunk + t);
          NetworkInstance inst = make_frame(cfg, seed, frame_seed);
          auto pi = priority_iterative(inst, solver_opt);
          if (!pi.feasible()) {
            keep[t] = 0;
            return;
          }
          Sample s;
          s.w.resize(inst.size());
          s.h.resize(inst.size());
          for (int n = 0; n < inst.size(); ++n) {
            s.w[n] = inst.device(n).weight;
            s.h[n] = inst.gain(n);
          }
          s.m_star = pi.strategy.clusters();
          samples[t] = std::move(s);
          keep[t] = 1;
        },
        threads);
    for (int t = 0; t < chunk && produced < n_samples; ++t) {
      if (keep[t]) {
        out.push_back(samples[t]);
        ++produced;
      }
    }
    ++round;
  }
  return out;
}

// Algorithm-3 style decision: predict m, build the strategy with the same
// priority ranking as the iterative search, solve the allocation LP once.
inline StrategyResult dl_solve(const NetworkInstance& inst,
                               const TrainedPredictor& pred,
                               const SolverOptions& opt = {}) {
  Vec w(inst.size()), h(inst.size());
  for (int n = 0; n < inst.size(); ++n) {
    w[n] = inst.device(n).weight;
    h[n] = inst.gain(n);
  }
  int m_hat = std::min(predict_m(pred, w, h), inst.size() / 2);
  std::vector<int> order = priority_order(inst);
  std::vector<int> sds(order.begin(), order.begin() + m_hat);
  std::vector<int> ads(order.end() - m_hat, order.end());
  std::reverse(ads.begin(), ads.end());
  std::vector<char> used(inst.size(), 0);
  for (int d : sds) used[d] = 1;
  for (int d : ads) used[d] = 1;
  std::vector<int> ids;
  for (int d = 0; d < inst.size(); ++d)
    if (!used[d]) ids.push_back(d);
  CollaborationStrategy s(sds, ads, ids, inst.size());
  auto r = detail::from_p4(Method::kDl, inst, s, solve_p4(inst, s, opt), 1);
  return r;
}

// ---- persistence ----

inline void save_predictor(const TrainedPredictor& pred, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "WPMEC-MLP 1\n";
  out << pred.n_devices << ' ' << pred.n_classes << '\n';
  out << pred.model.sizes.size();
  for (int s : pred.model.sizes) out << ' ' << s;
  out << '\n';
  for (std::size_t l = 0; l < pred.model.weights.size(); ++l) {
    const Mat& w = pred.model.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) out << w(i, j) << ' ';
    out << '\n';
    for (int i = 0; i < pred.model.biases[l].size(); ++i)
      out << pred.model.biases[l][i] << ' ';
    out << '\n';
  }
  for (int i = 0; i < pred.standardizer.mean.size(); ++i)
    out << pred.standardizer.mean[i] << ' ';
  out << '\n';
  for (int i = 0; i < pred.standardizer.std_dev.size(); ++i)
    out << pred.standardizer.std_dev[i] << ' ';
  out << '\n';
}

inline TrainedPredictor load_predictor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "WPMEC-MLP" || version != 1)
    throw std::runtime_error("bad model file " + path);
  TrainedPredictor pred;
  in >> pred.n_devices >> pred.n_classes;
  std::size_t n_sizes = 0;
  in >> n_sizes;
  pred.model.sizes.resize(n_sizes);
  for (auto& s : pred.model.sizes) in >> s;
  for (std::size_t l = 0; l + 1 < n_sizes; ++l) {
    Mat w(pred.model.sizes[l + 1], pred.model.sizes[l]);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) in >> w(i, j);
    pred.model.weights.push_back(std::move(w));
    Vec b(pred.model.sizes[l + 1]);
    for (int i = 0; i < b.size(); ++i) in >> b[i];
    pred.model.biases.push_back(std::move(b));
  }
  int n_feat = 2 * pred.n_devices;
  pred.standardizer.mean.resize(n_feat);
  for (int i = 0; i < n_feat; ++i) in >> pred.standardizer.mean[i];
  pred.standardizer.std_dev.resize(n_feat);
  for (int i = 0; i < n_feat; ++i) in >> pred.standardizer.std_dev[i];
  if (!in) throw std::runtime_error("truncated model file " + path);
  return pred;
}

inline void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  if (data.empty()) {
    out << "m_star\n";
    return;
  }
  const int n = static_cast<int>(data.front().w.size());
  for (int i = 0; i < n; ++i) out << 'w' << (i + 1) << ',';
  for (int i = 0; i < n; ++i) out << 'h' << (i + 1) << ',';
  out << "m_star\n";
  for (const auto& s : data) {
    for (int i = 0; i < n; ++i) out << format_double(s.w[i]) << ',';
    for (int i = 0; i < n; ++i) out << format_double(s.h[i]) << ',';
    out << s.m_star << '\n';
  }
}

}  // namespace wpmec
