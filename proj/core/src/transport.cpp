// Network simplex for the uniform-weight transportation problem.
//
// Sources 0..n-1 each supply m units, sinks n..n+m-1 each demand n units, so
// all flows stay integral and the plan mass is flow / (n m). Node n+m is an
// artificial root joined to every node by a big-M arc; the initial tree of
// those arcs carries all supply and is strongly feasible, and the leaving-arc
// rule below keeps it so, which rules out cycling on degenerate pivots.

#include <algorithm>
#include <cmath>
#include <limits>

#include "meritcurve/error.hpp"
#include "meritcurve/evaluation.hpp"

namespace meritcurve {

namespace {

class NetworkSimplex {
public:
  NetworkSimplex(int n, int m, std::vector<double> cost)
      : n_(n), m_(m), root_(n + m), nm_(static_cast<long>(n) * m), cost_(std::move(cost)) {
    const int N = n + m + 1;
    const long A = nm_ + n + m;
    double cmax = 0.0;
    for (double c : cost_) cmax = std::max(cmax, c);
    big_m_ = (static_cast<long double>(cmax) + 1.0L) * N;
    eps_ = 1e-14L * (static_cast<long double>(cmax) + 1.0L);
    flow_.assign(A, 0);
    parent_.assign(N, -1);
    pred_.assign(N, -1);
    up_.assign(N, false);
    depth_.assign(N, 0);
    pi_.assign(N, 0.0L);
    first_child_.assign(N, -1);
    next_.assign(N, -1);
    prev_.assign(N, -1);
    for (int v = 0; v < n + m; ++v) {
      const bool src = v < n;
      parent_[v] = root_;
      pred_[v] = nm_ + v;
      up_[v] = src;
      depth_[v] = 1;
      flow_[nm_ + v] = src ? m : n;
      pi_[v] = src ? -big_m_ : big_m_;
      link(v, root_);
    }
    block_ = std::max<long>(10, static_cast<long>(std::sqrt(static_cast<double>(A))));
  }

  long run() {
    long pivots = 0;
    for (long e; (e = price()) >= 0; ++pivots) pivot(e);
    for (long a = nm_; a < static_cast<long>(flow_.size()); ++a)
      if (flow_[a] != 0) throw Error(Errc::InvalidArgument, "transport problem infeasible");
    return pivots;
  }

  long long flow(long a) const { return flow_[a]; }

private:
  int src(long a) const { return a < nm_ ? static_cast<int>(a / m_) : a < nm_ + n_ ? static_cast<int>(a - nm_) : root_; }
  int tgt(long a) const {
    return a < nm_ ? n_ + static_cast<int>(a % m_) : a < nm_ + n_ ? root_ : static_cast<int>(a - nm_);
  }
  long double cost(long a) const { return a < nm_ ? static_cast<long double>(cost_[a]) : big_m_; }
  long double reduced(long a) const { return cost(a) + pi_[src(a)] - pi_[tgt(a)]; }

  // Block search: scan arcs cyclically, return the most negative reduced cost
  // in the first block that has one.
  long price() {
    const long A = static_cast<long>(flow_.size());
    long best = -1;
    long double best_rc = -eps_;
    long cnt = 0;
    for (long k = 0; k < A; ++k) {
      const long a = (next_arc_ + k) % A;
      const long double r = reduced(a);
      if (r < best_rc) {
        best_rc = r;
        best = a;
      }
      if (++cnt == block_) {
        if (best >= 0) {
          next_arc_ = (a + 1) % A;
          return best;
        }
        cnt = 0;
      }
    }
    return best;
  }

  void link(int v, int p) {
    prev_[v] = -1;
    next_[v] = first_child_[p];
    if (first_child_[p] >= 0) prev_[first_child_[p]] = v;
    first_child_[p] = v;
  }

  void unlink(int v) {
    const int p = parent_[v];
    if (prev_[v] >= 0) next_[prev_[v]] = next_[v];
    else first_child_[p] = next_[v];
    if (next_[v] >= 0) prev_[next_[v]] = prev_[v];
    prev_[v] = next_[v] = -1;
  }

  void pivot(long e) {
    const int u = src(e), v = tgt(e);
    int a = u, b = v;
    while (a != b) {
      if (depth_[a] > depth_[b]) a = parent_[a];
      else if (depth_[b] > depth_[a]) b = parent_[b];
      else a = parent_[a], b = parent_[b];
    }
    const int join = a;

    // Flow runs u -> v, up from v to join, down from join to u. Arcs against
    // that direction limit the step; ties go to the last one met when walking
    // the cycle from the join, which keeps the tree strongly feasible.
    constexpr long long inf = std::numeric_limits<long long>::max();
    long long delta = inf;
    int leave = -1;
    bool leave_on_u = false;
    for (int w = u; w != join; w = parent_[w])
      if (up_[w] && flow_[pred_[w]] < delta) {
        delta = flow_[pred_[w]];
        leave = w;
        leave_on_u = true;
      }
    for (int w = v; w != join; w = parent_[w])
      if (!up_[w] && flow_[pred_[w]] <= delta) {
        delta = flow_[pred_[w]];
        leave = w;
        leave_on_u = false;
      }
    if (leave < 0) throw Error(Errc::InvalidArgument, "unbounded transport cycle");

    if (delta > 0) {
      flow_[e] += delta;
      for (int w = u; w != join; w = parent_[w]) flow_[pred_[w]] += up_[w] ? -delta : delta;
      for (int w = v; w != join; w = parent_[w]) flow_[pred_[w]] += up_[w] ? delta : -delta;
    }

    // Re-hang the cut subtree: reverse the path from the entering endpoint
    // up to the leaving node and attach it to the other endpoint.
    const int start = leave_on_u ? u : v;
    const int new_parent = leave_on_u ? v : u;
    path_.clear();
    for (int w = start;; w = parent_[w]) {
      path_.push_back(w);
      if (w == leave) break;
    }
    old_pred_.clear();
    old_up_.clear();
    for (int w : path_) {
      old_pred_.push_back(pred_[w]);
      old_up_.push_back(up_[w]);
    }
    for (int w : path_) unlink(w);
    for (std::size_t i = 0; i < path_.size(); ++i) {
      const int w = path_[i];
      if (i == 0) {
        parent_[w] = new_parent;
        pred_[w] = e;
        up_[w] = leave_on_u;
      } else {
        parent_[w] = path_[i - 1];
        pred_[w] = old_pred_[i - 1];
        up_[w] = !old_up_[i - 1];
      }
      link(w, parent_[w]);
    }

    stack_.assign(1, start);
    while (!stack_.empty()) {
      const int w = stack_.back();
      stack_.pop_back();
      const int p = parent_[w];
      depth_[w] = depth_[p] + 1;
      pi_[w] = up_[w] ? pi_[p] - cost(pred_[w]) : pi_[p] + cost(pred_[w]);
      for (int c = first_child_[w]; c >= 0; c = next_[c]) stack_.push_back(c);
    }
  }

  int n_, m_, root_;
  long nm_;
  std::vector<double> cost_;
  long double big_m_ = 0, eps_ = 0;
  std::vector<long long> flow_;
  std::vector<int> parent_;
  std::vector<long> pred_;
  std::vector<bool> up_;
  std::vector<int> depth_;
  std::vector<long double> pi_;
  std::vector<int> first_child_, next_, prev_;
  long block_ = 10, next_arc_ = 0;
  std::vector<int> path_, stack_;
  std::vector<long> old_pred_;
  std::vector<bool> old_up_;
};

}  // namespace

TransportPlan optimal_transport(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t budget) {
  if (a.rows() == 0 || b.rows() == 0) throw Error(Errc::InvalidArgument, "empty point cloud");
  if (a.cols() != b.cols()) throw Error(Errc::DimMismatch, "point clouds differ in dimension");
  const auto n = static_cast<std::size_t>(a.rows()), m = static_cast<std::size_t>(b.rows());
  if (n * m > budget)
    throw Error(Errc::BudgetExceeded, std::to_string(n) + " x " + std::to_string(m) +
                                          " exceeds the exact-solver budget; subsample the clouds");
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = (a.row(i) - b.row(j)).squaredNorm();

  NetworkSimplex ns(static_cast<int>(n), static_cast<int>(m), cost);
  TransportPlan out;
  out.pivots = ns.run();
  const double unit = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const long long f = ns.flow(static_cast<long>(i * m + j));
      if (f == 0) continue;
      out.plan.emplace_back(static_cast<int>(i), static_cast<int>(j), f * unit);
      total += static_cast<long double>(f) * cost[i * m + j];
    }
  out.cost = static_cast<double>(total * unit);
  return out;
}

}  // namespace meritcurve
