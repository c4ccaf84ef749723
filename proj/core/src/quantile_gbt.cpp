#include "meritcurve/quantile_gbt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

#include "meritcurve/error.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

namespace {

struct PresetRow {
  std::string_view target;
  double alpha, lr;
  int depth;
  double mcw, subsample, colsample, lambda, reg_alpha, gamma;
};

constexpr PresetRow kDemandPresets[] = {
    {"coef_0", 0.5, 0.030, 3, 3, 0.6, 1.0, 1, 1.0, 0.3},   {"coef_1", 0.5, 0.005, 3, 7, 0.4, 0.8, 10, 1.0, 0.5},
    {"coef_2", 0.5, 0.030, 5, 5, 0.6, 0.6, 10, 1.0, 0.3},  {"coef_3", 0.5, 0.010, 3, 1, 0.7, 0.8, 1, 0.0, 0.0},
    {"U", 0.5, 0.030, 5, 1, 0.7, 1.0, 1, 0.0, 0.0},        {"L", 0.8, 0.030, 5, 1, 0.7, 1.0, 1, 0.0, 0.0},
    {"p_start", 0.4, 0.010, 3, 1, 0.7, 0.8, 1, 0.0, 0.0},  {"p_end", 0.5, 0.010, 3, 1, 0.7, 0.8, 1, 0.0, 0.0},
};

constexpr PresetRow kSupplyPresets[] = {
    {"coef_0", 0.7, 0.03, 3, 6, 0.6, 1.0, 0.5, 0.8, 0.0},  {"coef_1", 0.5, 0.01, 3, 8, 0.5, 0.8, 8.7, 0.8, 0.9},
    {"coef_2", 0.3, 0.02, 6, 15, 0.5, 0.6, 15.1, 1.3, 0.4}, {"coef_3", 0.7, 0.01, 5, 2, 0.7, 0.7, 1.3, 0.0, 0.0},
    {"U", 0.5, 0.05, 3, 2, 0.5, 1.0, 1.5, 0.0, 0.5},        {"L", 0.5, 0.04, 3, 6, 0.8, 1.0, 1.0, 0.0, 0.0},
    {"p_end", 0.5, 0.01, 5, 10, 0.5, 0.7, 0.4, 0.0, 0.2},   {"p_start", 0.7, 0.01, 2, 6, 0.6, 0.7, 1.4, 0.0, 0.0},
};

}  // namespace

GbtHyperparams GbtHyperparams::preset(Side side, std::string_view target) {
  const auto& table = side == Side::Demand ? kDemandPresets : kSupplyPresets;
  for (const auto& r : table) {
    if (r.target != target) continue;
    GbtHyperparams hp;
    hp.quantile_alpha = r.alpha;
    hp.learning_rate = r.lr;
    hp.max_depth = r.depth;
    hp.min_child_weight = r.mcw;
    hp.subsample = r.subsample;
    hp.colsample_bytree = r.colsample;
    hp.reg_lambda = r.lambda;
    hp.reg_alpha = r.reg_alpha;
    hp.gamma = r.gamma;
    return hp;
  }
  throw Error(Errc::InvalidArgument, "unknown forecast target '" + std::string(target) + "'");
}

void GbtHyperparams::validate() const {
  auto bad = [](const std::string& m) { throw Error(Errc::InvalidConfig, m); };
  if (!(quantile_alpha > 0.0 && quantile_alpha < 1.0)) bad("quantile_alpha must be in (0, 1)");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) bad("learning_rate must be in (0, 1]");
  if (max_depth < 1) bad("max_depth must be >= 1");
  if (!(min_child_weight >= 0.0)) bad("min_child_weight must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) bad("subsample must be in (0, 1]");
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) bad("colsample_bytree must be in (0, 1]");
  if (!(reg_lambda >= 0.0) || !(reg_alpha >= 0.0) || !(gamma >= 0.0)) bad("regularisation terms must be >= 0");
  if (n_rounds < 0) bad("n_rounds must be >= 0");
  if (early_stopping_rounds < 0) bad("early_stopping_rounds must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) bad("validation_fraction must be in (0, 1)");
  if (max_bins < 2 || max_bins > 256) bad("max_bins must be in [2, 256]");
}

nlohmann::json GbtHyperparams::to_json() const {
  return {{"quantile_alpha", quantile_alpha},
          {"learning_rate", learning_rate},
          {"max_depth", max_depth},
          {"min_child_weight", min_child_weight},
          {"subsample", subsample},
          {"colsample_bytree", colsample_bytree},
          {"reg_lambda", reg_lambda},
          {"reg_alpha", reg_alpha},
          {"gamma", gamma},
          {"n_rounds", n_rounds},
          {"early_stopping_rounds", early_stopping_rounds},
          {"validation_fraction", validation_fraction},
          {"max_bins", max_bins},
          {"seed", seed},
          {"objective", objective == GbtObjective::Quantile ? "quantile" : "absolute"}};
}

GbtHyperparams GbtHyperparams::from_json(const nlohmann::json& j, const GbtHyperparams& base) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "hyperparameters must be a JSON object");
  GbtHyperparams hp = base;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "quantile_alpha") hp.quantile_alpha = v.get<double>();
      else if (key == "learning_rate") hp.learning_rate = v.get<double>();
      else if (key == "max_depth") hp.max_depth = v.get<int>();
      else if (key == "min_child_weight") hp.min_child_weight = v.get<double>();
      else if (key == "subsample") hp.subsample = v.get<double>();
      else if (key == "colsample_bytree") hp.colsample_bytree = v.get<double>();
      else if (key == "reg_lambda") hp.reg_lambda = v.get<double>();
      else if (key == "reg_alpha") hp.reg_alpha = v.get<double>();
      else if (key == "gamma") hp.gamma = v.get<double>();
      else if (key == "n_rounds") hp.n_rounds = v.get<int>();
      else if (key == "early_stopping_rounds") hp.early_stopping_rounds = v.get<int>();
      else if (key == "validation_fraction") hp.validation_fraction = v.get<double>();
      else if (key == "max_bins") hp.max_bins = v.get<int>();
      else if (key == "seed") hp.seed = v.get<std::uint64_t>();
      else if (key == "objective") {
        const auto s = v.get<std::string>();
        if (s == "quantile") hp.objective = GbtObjective::Quantile;
        else if (s == "absolute") hp.objective = GbtObjective::Absolute;
        else throw Error(Errc::InvalidConfig, "objective must be 'quantile' or 'absolute'");
      } else {
        throw Error(Errc::InvalidConfig, "unknown hyperparameter '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("bad hyperparameter value: ") + e.what());
  }
  hp.validate();
  return hp;
}

GbtHyperparams GbtHyperparams::from_json(const nlohmann::json& j) { return from_json(j, GbtHyperparams{}); }

double RegressionTree::predict(std::span<const double> row) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double GbtModel::predict(std::span<const double> row) const {
  double s = base_score;
  for (const auto& t : trees) {
    int i = 0;
    while (t.nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = t.nodes[static_cast<std::size_t>(i)];
      const auto f = static_cast<std::size_t>(n.feature);
      if (f >= row.size() || std::isnan(row[f]))
        throw Error(Errc::MissingFeature, "row lacks feature " + std::to_string(f));
      i = row[f] < n.threshold ? n.left : n.right;
    }
    s += t.nodes[static_cast<std::size_t>(i)].value;
  }
  return s;
}

std::vector<double> GbtModel::predict(const DataMatrix& X) const {
  std::vector<double> out(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) out[r] = predict(X.row(r));
  return out;
}

nlohmann::json GbtModel::to_json() const {
  nlohmann::json trees_j = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees_j.push_back(std::move(nodes));
  }
  return {{"format", "meritcurve-gbt"},
          {"version", 1},
          {"base_score", base_score},
          {"n_features", n_features},
          {"trees", std::move(trees_j)}};
}

GbtModel GbtModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "meritcurve-gbt" || j.at("version") != 1)
      throw Error(Errc::Format, "not a version-1 meritcurve GBT dump");
    GbtModel m;
    m.base_score = j.at("base_score").get<double>();
    m.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& tj : j.at("trees")) {
      RegressionTree t;
      for (const auto& nj : tj)
        t.nodes.push_back({nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(), nj.at(3).get<int>(),
                           nj.at(4).get<double>()});
      for (const auto& n : t.nodes)
        if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= t.nodes.size() ||
                               static_cast<std::size_t>(n.right) >= t.nodes.size()))
          throw Error(Errc::Format, "tree child index out of range");
      if (t.nodes.empty()) throw Error(Errc::Format, "empty tree");
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("bad GBT dump: ") + e.what());
  }
}

std::uint64_t GbtModel::hash() const { return fnv1a(to_json().dump()); }

double pinball_loss(double y, double pred, double alpha) noexcept {
  const double r = y - pred;
  return r >= 0.0 ? alpha * r : (alpha - 1.0) * r;
}

double mean_pinball(std::span<const double> y, std::span<const double> pred, double alpha) {
  if (y.size() != pred.size() || y.empty()) throw Error(Errc::DimMismatch, "pinball needs equal non-empty inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += pinball_loss(y[i], pred[i], alpha);
  return s / static_cast<double>(y.size());
}

namespace {

// Per-feature quantile cut points; bin(x) = number of cuts <= x.
struct Binned {
  std::size_t rows = 0, cols = 0;
  std::vector<std::vector<double>> cuts;
  std::vector<std::uint8_t> bins;  // row-major
};

Binned bin_matrix(const DataMatrix& X, std::size_t n_rows, int max_bins) {
  Binned b;
  b.rows = n_rows;
  b.cols = X.cols();
  b.cuts.resize(b.cols);
  b.bins.resize(n_rows * b.cols);
  std::vector<double> col(n_rows);
  for (std::size_t c = 0; c < b.cols; ++c) {
    for (std::size_t r = 0; r < n_rows; ++r) col[r] = X(r, c);
    std::sort(col.begin(), col.end());
    std::vector<double> uniq;
    for (double v : col)
      if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
    auto& cuts = b.cuts[c];
    const auto max_cuts = static_cast<std::size_t>(max_bins - 1);
    if (uniq.size() <= max_cuts + 1) {
      cuts.assign(uniq.begin() + (uniq.empty() ? 0 : 1), uniq.end());
    } else {
      for (std::size_t k = 1; k <= max_cuts; ++k) {
        const double v = col[k * n_rows / (max_cuts + 1)];
        if (v != col.front() && (cuts.empty() || v > cuts.back())) cuts.push_back(v);
      }
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double v = X(r, c);
      b.bins[r * b.cols + c] =
          static_cast<std::uint8_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    }
  }
  return b;
}

double soft_threshold(double g, double a) {
  if (g > a) return g - a;
  if (g < -a) return g + a;
  return 0.0;
}

struct Grower {
  const Binned& B;
  const GbtHyperparams& hp;
  const std::vector<double>& grad;
  const std::vector<std::size_t>& features;
  std::vector<std::pair<int, std::vector<std::size_t>>> leaves;  // node index, rows
  RegressionTree tree;

  double score(double G, double H) const {
    const double t = soft_threshold(G, hp.reg_alpha);
    return t * t / (H + hp.reg_lambda);
  }

  void grow(int node, std::vector<std::size_t> rows, int depth) {
    if (depth >= hp.max_depth || rows.size() < 2) {
      leaves.emplace_back(node, std::move(rows));
      return;
    }
    const std::size_t nf = features.size();
    constexpr std::size_t kBins = 256;
    std::vector<double> hg(nf * kBins, 0.0), hh(nf * kBins, 0.0);
    double G = 0.0;
    for (auto r : rows) {
      const double g = grad[r];
      G += g;
      const std::uint8_t* br = &B.bins[r * B.cols];
      for (std::size_t k = 0; k < nf; ++k) {
        const std::size_t idx = k * kBins + br[features[k]];
        hg[idx] += g;
        hh[idx] += 1.0;
      }
    }
    const double H = static_cast<double>(rows.size());
    const double parent = score(G, H);
    double best_gain = 0.0;
    std::size_t best_f = 0, best_cut = 0;
    bool found = false;
    for (std::size_t k = 0; k < nf; ++k) {
      const auto& cuts = B.cuts[features[k]];
      double gl = 0.0, hl = 0.0;
      for (std::size_t c = 0; c < cuts.size(); ++c) {
        gl += hg[k * kBins + c];
        hl += hh[k * kBins + c];
        const double hr = H - hl;
        if (hl < 1.0 || hr < 1.0 || hl < hp.min_child_weight || hr < hp.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(G - gl, hr) - parent) - hp.gamma;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = k;
          best_cut = c;
          found = true;
        }
      }
    }
    if (!found) {
      leaves.emplace_back(node, std::move(rows));
      return;
    }
    const std::size_t f = features[best_f];
    std::vector<std::size_t> left, right;
    for (auto r : rows) (B.bins[r * B.cols + f] <= best_cut ? left : right).push_back(r);
    auto& n = tree.nodes[static_cast<std::size_t>(node)];
    n.feature = static_cast<int>(f);
    n.threshold = B.cuts[f][best_cut];
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(node)].left = li;
    tree.nodes[static_cast<std::size_t>(node)].right = li + 1;
    rows.clear();
    rows.shrink_to_fit();
    grow(li, std::move(left), depth + 1);
    grow(li + 1, std::move(right), depth + 1);
  }
};

}  // namespace

GbtModel train_gbt(const DataMatrix& X, std::span<const double> y, const GbtHyperparams& hp) {
  hp.validate();
  if (X.rows != y.size()) throw Error(Errc::DimMismatch, "X and y row counts differ");
  if (y.size() < 2) throw Error(Errc::InvalidArgument, "train_gbt needs at least 2 rows");
  if (X.cols() == 0) throw Error(Errc::InvalidArgument, "train_gbt needs at least one feature");
  const double alpha = hp.objective == GbtObjective::Absolute ? 0.5 : hp.quantile_alpha;

  std::size_t n_train = y.size();
  if (hp.early_stopping_rounds > 0) {
    const auto n_valid = static_cast<std::size_t>(std::floor(hp.validation_fraction * static_cast<double>(y.size())));
    if (n_valid >= 1 && y.size() - n_valid >= 2) n_train = y.size() - n_valid;
  }
  const std::span<const double> yt = y.first(n_train), yv = y.subspan(n_train);

  GbtModel m;
  m.n_features = X.cols();
  m.base_score = quantile(yt, alpha);
  std::vector<double> pt(n_train, m.base_score), pv(yv.size(), m.base_score);
  m.train_loss.push_back(mean_pinball(yt, pt, alpha));
  if (!yv.empty()) m.valid_loss.push_back(mean_pinball(yv, pv, alpha));
  if (std::all_of(yt.begin(), yt.end(), [&](double v) { return v == yt.front(); })) return m;

  const Binned B = bin_matrix(X, n_train, hp.max_bins);
  Rng rng(hp.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::size_t> all_features(X.cols());
  std::iota(all_features.begin(), all_features.end(), 0);
  const auto n_cols = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(hp.colsample_bytree * static_cast<double>(X.cols()))));

  std::vector<double> grad(n_train);
  double best_valid = m.valid_loss.empty() ? 0.0 : m.valid_loss.front();
  std::size_t best_trees = 0;
  std::vector<double> resid;

  for (int round = 0; round < hp.n_rounds; ++round) {
    std::vector<std::size_t> rows;
    rows.reserve(n_train);
    for (std::size_t r = 0; r < n_train; ++r)
      if (hp.subsample >= 1.0 || unif(rng) < hp.subsample) rows.push_back(r);
    if (rows.empty()) rows.push_back(static_cast<std::size_t>(rng() % n_train));
    std::vector<std::size_t> features = all_features;
    if (n_cols < features.size()) {
      std::shuffle(features.begin(), features.end(), rng);
      features.resize(n_cols);
      std::sort(features.begin(), features.end());
    }
    for (auto r : rows) {
      const double res = yt[r] - pt[r];
      if (hp.objective == GbtObjective::Absolute) grad[r] = res > 0 ? -1.0 : res < 0 ? 1.0 : 0.0;
      else grad[r] = res > 0 ? -alpha : res < 0 ? 1.0 - alpha : 0.0;
    }

    Grower g{B, hp, grad, features, {}, {}};
    g.tree.nodes.emplace_back();
    g.grow(0, std::move(rows), 0);

    // Leaf values: shrunken alpha-quantile of the residuals that reached the leaf.
    for (auto& [node, lr] : g.leaves) {
      resid.clear();
      for (auto r : lr) resid.push_back(yt[r] - pt[r]);
      const double h = static_cast<double>(lr.size());
      g.tree.nodes[static_cast<std::size_t>(node)].value =
          hp.learning_rate * quantile(resid, alpha) * h / (h + hp.reg_lambda);
    }
    for (std::size_t r = 0; r < n_train; ++r) pt[r] += g.tree.predict(X.row(r));
    for (std::size_t r = 0; r < yv.size(); ++r) pv[r] += g.tree.predict(X.row(n_train + r));
    m.trees.push_back(std::move(g.tree));
    m.train_loss.push_back(mean_pinball(yt, pt, alpha));
    if (!yv.empty()) {
      const double vl = mean_pinball(yv, pv, alpha);
      m.valid_loss.push_back(vl);
      if (vl < best_valid) {
        best_valid = vl;
        best_trees = m.trees.size();
      } else if (static_cast<int>(m.trees.size() - best_trees) >= hp.early_stopping_rounds) {
        break;
      }
    }
  }
  if (!yv.empty() && best_trees < m.trees.size()) {
    m.trees.resize(best_trees);
    m.train_loss.resize(best_trees + 1);
    m.valid_loss.resize(best_trees + 1);
  }
  return m;
}

ParametricCurve repair_curve(const std::array<double, ParametricCurve::kParams>& raw, Side side) {
  ParametricCurve pc = ParametricCurve::from_params(side, raw);
  if (pc.p_start >= pc.p_end) {
    std::swap(pc.p_start, pc.p_end);
    pc.p_end += 1.0;
  }
  pc.U = std::max(pc.U, 0.0);
  pc.L = std::max(pc.L, 0.0);
  if ((side == Side::Demand && pc.U < pc.L) || (side == Side::Supply && pc.L < pc.U)) std::swap(pc.U, pc.L);
  return pc;
}

ParametricCurve forecast_curve(const CurveModels& models, std::span<const double> row, Side side) {
  std::array<double, ParametricCurve::kParams> raw{};
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = models[i].predict(row);
  return repair_curve(raw, side);
}

}  // namespace meritcurve
