#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "matchlab/core.hpp"

namespace matchlab {

/// Primal network simplex for the uncapacitated transportation problem
/// min sum c(i,j) f(i,j) s.t. row sums = supply[i], column sums = demand[j],
/// with integer supplies and costs. The arc set is the complete bipartite
/// graph, given implicitly by a cost callback, so memory stays O(m + k).
///
/// Follows the classic spanning-tree design (thread/pred/depth lists,
/// artificial root, strongly feasible leaving-arc rule, block search
/// pivoting). Supplies and demands must have equal totals.
class TransportSimplex {
 public:
  using i64 = std::int64_t;
  using CostFn = std::function<i64(std::size_t, std::size_t)>;

  struct Flow {
    std::size_t source;
    std::size_t sink;
    i64 amount;
  };

  TransportSimplex(std::vector<i64> supply, std::vector<i64> demand, CostFn cost)
      : m_(supply.size()), k_(demand.size()), cost_(std::move(cost)) {
    i64 total_s = 0, total_d = 0;
    for (i64 s : supply) {
      if (s < 0) throw InputError("transport: negative supply");
      total_s += s;
    }
    for (i64 d : demand) {
      if (d < 0) throw InputError("transport: negative demand");
      total_d += d;
    }
    if (total_s != total_d) throw InputError("transport: supply and demand totals differ");
    supply_.resize(m_ + k_);
    for (std::size_t i = 0; i < m_; ++i) supply_[i] = supply[i];
    for (std::size_t j = 0; j < k_; ++j) supply_[m_ + j] = -demand[j];
  }

  /// Runs to optimality and certifies it against all m*k arcs.
  void solve() {
    const std::size_t nodes = m_ + k_;
    if (nodes == 0) return;
    i64 max_c = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < k_; ++j) max_c = std::max(max_c, cost_(i, j));
    }
    art_cost_ = (max_c + 1) * static_cast<i64>(nodes + 1);
    init_tree();
    const std::size_t arcs = m_ * k_;
    block_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(arcs))));
    next_arc_ = 0;
    while (find_entering()) {
      find_join();
      if (!find_leaving()) throw InternalError("transport: unbounded pivot");
      change_flow();
      update_tree();
      update_potentials();
    }
    for (std::size_t u = 0; u < nodes; ++u) {
      if (is_artificial(pred_arc_[u]) && flow_[u] != 0) {
        throw InternalError("transport: infeasible flow, artificial arc carries mass");
      }
    }
    certify();
  }

  std::vector<Flow> flows() const {
    std::vector<Flow> out;
    for (std::size_t u = 0; u < m_ + k_; ++u) {
      const std::size_t a = pred_arc_[u];
      if (is_artificial(a) || flow_[u] == 0) continue;
      out.push_back({a / k_, a % k_, flow_[u]});
    }
    std::sort(out.begin(), out.end(), [](const Flow& x, const Flow& y) {
      return x.source != y.source ? x.source < y.source : x.sink < y.sink;
    });
    return out;
  }

  /// Objective in integer units, accumulated in long double (amount * cost
  /// can exceed the int64 range).
  long double total_cost() const {
    long double total = 0.0L;
    for (const auto& f : flows()) total += static_cast<long double>(f.amount) * cost_(f.source, f.sink);
    return total;
  }

  const std::vector<i64>& potentials() const { return pi_; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  enum Dir : int { kDown = -1, kUp = 1 };

  std::size_t m_, k_;
  CostFn cost_;
  std::vector<i64> supply_;
  i64 art_cost_ = 0;

  // Tree indexed by node; node m_+k_ is the artificial root. Each non-root
  // node u stores its parent arc and the flow on it.
  std::vector<std::size_t> parent_, pred_arc_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<int> pred_dir_;
  std::vector<i64> flow_, pi_;

  std::size_t block_ = 0, next_arc_ = 0;
  std::size_t in_arc_ = 0, join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0;
  i64 delta_ = 0;
  std::size_t first_ = 0, second_ = 0;

  std::size_t root() const { return m_ + k_; }
  std::size_t arc_count() const { return m_ * k_; }
  bool is_artificial(std::size_t a) const { return a >= arc_count(); }
  std::size_t source_of(std::size_t a) const { return is_artificial(a) ? art_source(a) : a / k_; }
  std::size_t target_of(std::size_t a) const { return is_artificial(a) ? art_target(a) : m_ + a % k_; }
  // Artificial arc for node u: u -> root for sources, root -> u for sinks.
  std::size_t art_source(std::size_t a) const {
    const std::size_t u = a - arc_count();
    return u < m_ ? u : root();
  }
  std::size_t art_target(std::size_t a) const {
    const std::size_t u = a - arc_count();
    return u < m_ ? root() : u;
  }
  i64 arc_cost(std::size_t a) const {
    if (!is_artificial(a)) return cost_(a / k_, a % k_);
    return a - arc_count() < m_ ? 0 : art_cost_;
  }

  void init_tree() {
    const std::size_t nodes = m_ + k_;
    parent_.assign(nodes + 1, kNone);
    pred_arc_.assign(nodes + 1, kNone);
    thread_.assign(nodes + 1, 0);
    rev_thread_.assign(nodes + 1, 0);
    succ_num_.assign(nodes + 1, 1);
    last_succ_.assign(nodes + 1, 0);
    pred_dir_.assign(nodes + 1, kUp);
    flow_.assign(nodes + 1, 0);
    pi_.assign(nodes + 1, 0);
    const std::size_t r = root();
    parent_[r] = kNone;
    succ_num_[r] = nodes + 1;
    last_succ_[r] = nodes == 0 ? r : nodes - 1;
    thread_[r] = 0;
    rev_thread_[0] = r;
    for (std::size_t u = 0; u < nodes; ++u) {
      parent_[u] = r;
      thread_[u] = u + 1 < nodes ? u + 1 : r;
      rev_thread_[u + 1 < nodes ? u + 1 : r] = u;
      last_succ_[u] = u;
      pred_arc_[u] = arc_count() + u;
      if (u < m_) {
        pred_dir_[u] = kUp;  // arc u -> root
        pi_[u] = 0;
        flow_[u] = supply_[u];
      } else {
        pred_dir_[u] = kDown;  // arc root -> u
        pi_[u] = art_cost_;
        flow_[u] = -supply_[u];
      }
    }
    rev_thread_[0] = r;
  }

  i64 reduced(std::size_t a) const { return arc_cost(a) + pi_[source_of(a)] - pi_[target_of(a)]; }

  // Arcs not in the tree carry zero flow (uncapacitated, lower bound 0), so
  // an arc is eligible iff its reduced cost is negative.
  bool find_entering() {
    const std::size_t arcs = arc_count();
    if (arcs == 0) return false;
    i64 min_rc = 0;
    std::size_t best = kNone;
    std::size_t cnt = block_;
    std::size_t e = next_arc_;
    for (std::size_t visited = 0; visited < arcs; ++visited) {
      const std::size_t i = e / k_, j = e % k_;
      const i64 rc = cost_(i, j) + pi_[i] - pi_[m_ + j];
      if (rc < min_rc) {
        min_rc = rc;
        best = e;
      }
      if (--cnt == 0) {
        if (best != kNone) {
          next_arc_ = e + 1 == arcs ? 0 : e + 1;
          in_arc_ = best;
          return true;
        }
        cnt = block_;
      }
      e = e + 1 == arcs ? 0 : e + 1;
    }
    if (best == kNone) return false;
    next_arc_ = e;
    in_arc_ = best;
    return true;
  }

  void find_join() {
    std::size_t u = source_of(in_arc_);
    std::size_t v = target_of(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    join_ = u;
  }

  // Entering arc pushes flow source -> target, so the cycle runs from the
  // source up to the join (against the tree) and from the join down to the
  // target.
  bool find_leaving() {
    first_ = source_of(in_arc_);
    second_ = target_of(in_arc_);
    delta_ = std::numeric_limits<i64>::max();
    int result = 0;
    for (std::size_t u = first_; u != join_; u = parent_[u]) {
      // flow on the tree arc between u and its parent decreases iff it
      // points from u upward
      if (pred_dir_[u] == kUp) {
        if (flow_[u] < delta_) {
          delta_ = flow_[u];
          u_out_ = u;
          result = 1;
        }
      }
    }
    for (std::size_t u = second_; u != join_; u = parent_[u]) {
      if (pred_dir_[u] == kDown) {
        if (flow_[u] <= delta_) {
          delta_ = flow_[u];
          u_out_ = u;
          result = 2;
        }
      }
    }
    if (result == 1) {
      u_in_ = first_;
      v_in_ = second_;
    } else {
      u_in_ = second_;
      v_in_ = first_;
    }
    return result != 0;
  }

  void change_flow() {
    if (delta_ > 0) {
      for (std::size_t u = first_; u != join_; u = parent_[u]) flow_[u] += pred_dir_[u] == kUp ? -delta_ : delta_;
      for (std::size_t u = second_; u != join_; u = parent_[u]) flow_[u] += pred_dir_[u] == kUp ? delta_ : -delta_;
    }
  }

  // Re-hang the subtree: the leaving arc (u_out_, parent) is removed and the
  // entering arc (u_in_, v_in_) added, with u_in_ becoming a child of v_in_.
  void update_tree() {
    const std::size_t old_rev_thread = rev_thread_[u_out_];
    const std::size_t old_succ_num = succ_num_[u_out_];
    const std::size_t old_last_succ = last_succ_[u_out_];
    const std::size_t v_out = parent_[u_out_];

    // Check if u_in and u_out coincide
    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_arc_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source_of(in_arc_) ? kUp : kDown;
      flow_[u_in_] = delta_;

      if (thread_[v_in_] != u_out_) {
        std::size_t after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      // Handle the case when old_rev_thread equals to v_in
      // (it also means that join and v_out coincide)
      std::size_t thread_continue =
          old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

      // Update thread and parent along the stem nodes (i.e. the nodes
      // between u_in and u_out, whose parent have to be changed)
      std::size_t stem = u_in_;
      std::size_t par_stem = v_in_;
      std::size_t next_stem;
      std::size_t last = last_succ_[u_in_];
      std::size_t before, after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        // Insert the next stem node into the thread list
        next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_revs_.push_back(last);

        // Remove the subtree of stem from the thread list
        before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;

        // Change the parent node and shift stem nodes
        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;

        // Update last and after
        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;

      // Remove the subtree of u_out from the thread list except for
      // the case when old_rev_thread equals to v_in
      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }

      // Update rev_thread using the new thread values
      for (std::size_t d : dirty_revs_) rev_thread_[thread_[d]] = d;

      // Update pred_arc, pred_dir and flow for the stem nodes
      std::size_t tmp_sc = 0;
      const std::size_t tmp_ls = last_succ_[u_out_];
      for (std::size_t u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_arc_[u] = pred_arc_[p];
        pred_dir_[u] = -pred_dir_[p];
        flow_[u] = flow_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_arc_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source_of(in_arc_) ? kUp : kDown;
      flow_[u_in_] = delta_;
      succ_num_[u_in_] = old_succ_num;
    }

    // Update last_succ from v_in towards the root
    const std::size_t up_limit_out = last_succ_[join_] == v_in_ ? join_ : kNone;
    const std::size_t last_succ_out = last_succ_[u_out_];
    for (std::size_t u = v_in_; u != kNone && last_succ_[u] == v_in_; u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }

    // Update last_succ from v_out towards the root
    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (std::size_t u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
        last_succ_[u] = old_rev_thread;
      }
    } else if (last_succ_out != old_last_succ) {
      for (std::size_t u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
        last_succ_[u] = last_succ_out;
      }
    }

    // Update succ_num from v_in to join
    for (std::size_t u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    // Update succ_num from v_out to join
    for (std::size_t u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potentials() {
    const i64 sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
    const std::size_t end = thread_[last_succ_[u_in_]];
    for (std::size_t u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  void certify() const {
    // tree arcs tight, all arcs dual feasible
    for (std::size_t u = 0; u < m_ + k_; ++u) {
      if (flow_[u] < 0) throw InternalError("transport: negative flow in final tree");
      if (reduced(pred_arc_[u]) != 0) throw InternalError("transport: tree arc not tight");
    }
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < k_; ++j) {
        if (cost_(i, j) + pi_[i] - pi_[m_ + j] < 0) {
          throw InternalError("transport: dual infeasible arc after pivoting");
        }
      }
    }
  }

  std::vector<std::size_t> dirty_revs_;
};

}  // namespace matchlab
