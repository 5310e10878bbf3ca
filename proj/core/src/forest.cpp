#include "mtrrt/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>

namespace mtrrt {

Tree::Tree(TreeKind kind, const State& root) : kind_(kind) {
  insert_node(TreeNode{root, std::nullopt, std::nullopt});
}

std::int64_t Tree::bucket_key(double h, double v) {
  const auto ch = static_cast<std::int64_t>(std::floor(h / kBucketSize));
  const auto cv = static_cast<std::int64_t>(std::floor(v / kBucketSize));
  return (ch << 32) ^ (cv & 0xffffffff);
}

std::size_t Tree::insert_node(TreeNode node) {
  const auto ch =
      static_cast<std::int32_t>(std::floor(node.state.pos.h / kBucketSize));
  const auto cv =
      static_cast<std::int32_t>(std::floor(node.state.pos.v / kBucketSize));
  if (nodes_.empty()) {
    cell_min_h_ = cell_max_h_ = ch;
    cell_min_v_ = cell_max_v_ = cv;
  } else {
    cell_min_h_ = std::min(cell_min_h_, ch);
    cell_max_h_ = std::max(cell_max_h_, ch);
    cell_min_v_ = std::min(cell_min_v_, cv);
    cell_max_v_ = std::max(cell_max_v_, cv);
  }
  const std::int64_t key = bucket_key(node.state.pos.h, node.state.pos.v);
  buckets_[key].push_back(static_cast<std::uint32_t>(nodes_.size()));
  live_buckets_[key].push_back(static_cast<std::uint32_t>(nodes_.size()));
  nodes_.push_back(std::move(node));
  spent_.push_back(0);
  exhausted_.push_back(0);
  return nodes_.size() - 1;
}

void Tree::spend_control(std::size_t i, unsigned control, unsigned total) {
  spent_[i] |= std::uint64_t{1} << control;
  const std::uint64_t full = total >= 64
                                 ? ~std::uint64_t{0}
                                 : (std::uint64_t{1} << total) - 1;
  if (!exhausted_[i] && (spent_[i] & full) == full) {
    exhausted_[i] = 1;
    ++exhausted_count_;
    const Point& p = nodes_[i].state.pos;
    std::vector<std::uint32_t>& cell = live_buckets_[bucket_key(p.h, p.v)];
    cell.erase(std::find(cell.begin(), cell.end(),
                         static_cast<std::uint32_t>(i)));
  }
}

std::size_t Tree::nearest_extendable(const Point& q) const {
  if (exhausted_count_ == 0) return nearest_bucketed(q);
  return nearest_bucketed(q, /*skip_exhausted=*/true);
}

double Tree::bbox_lower_bound(const Point& q) const {
  const double dx = std::max({cell_min_h_ * kBucketSize - q.h,
                              q.h - (cell_max_h_ + 1) * kBucketSize, 0.0});
  const double dy = std::max({cell_min_v_ * kBucketSize - q.v,
                              q.v - (cell_max_v_ + 1) * kBucketSize, 0.0});
  return std::hypot(dx, dy);
}

std::size_t Tree::add_node(const State& s, std::size_t parent,
                           std::optional<ControlInput> control) {
  if (parent >= nodes_.size()) {
    throw std::out_of_range("Tree::add_node: parent index " +
                            std::to_string(parent) + " out of range");
  }
  return insert_node(TreeNode{s, parent, control});
}

namespace {

// Breadth-first renumbering from new_root over the undirected adjacency.
// order[k] = old index of the k-th new node; new_parent[k] = new index of
// its traversal predecessor (none for k = 0).
void reroot_order(const Tree& tree, std::size_t new_root,
                  std::vector<std::size_t>& order,
                  std::vector<std::optional<std::size_t>>& new_parent) {
  const std::size_t n = tree.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (auto p = tree.parent(i)) {
      adj[*p].push_back(i);
      adj[i].push_back(*p);
    }
  }
  order.clear();
  new_parent.clear();
  std::vector<std::size_t> old_to_new(n, SIZE_MAX);
  std::vector<std::uint8_t> seen(n, 0);
  order.push_back(new_root);
  new_parent.push_back(std::nullopt);
  seen[new_root] = 1;
  old_to_new[new_root] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t cur = order[head];
    for (std::size_t nb : adj[cur]) {
      if (seen[nb]) continue;
      seen[nb] = 1;
      old_to_new[nb] = order.size();
      order.push_back(nb);
      new_parent.push_back(head);
    }
  }
}

}  // namespace

Tree Tree::rerooted(std::size_t new_root) const {
  if (new_root >= nodes_.size()) {
    throw std::out_of_range("Tree::rerooted: index out of range");
  }
  std::vector<std::size_t> order;
  std::vector<std::optional<std::size_t>> new_parent;
  reroot_order(*this, new_root, order, new_parent);
  Tree out;
  out.kind_ = kind_;
  out.nodes_.reserve(nodes_.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const TreeNode& src = nodes_[order[k]];
    // A control stays meaningful only where the edge kept its direction.
    std::optional<ControlInput> ctrl;
    if (new_parent[k] && src.parent &&
        order[*new_parent[k]] == *src.parent) {
      ctrl = src.control;
    }
    out.insert_node(TreeNode{src.state, new_parent[k], ctrl});
  }
  return out;
}

bool Tree::audit(const OccupancyGrid* grid, std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (nodes_.empty()) return fail("empty tree");
  std::size_t roots = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& p = nodes_[i].parent;
    if (!p) {
      ++roots;
      if (i != 0) return fail("root at nonzero index " + std::to_string(i));
      continue;
    }
    if (*p >= i) {
      return fail("node " + std::to_string(i) + ": parent " +
                  std::to_string(*p) + " not earlier");
    }
    if (grid && !segment_collision_free(*grid, nodes_[*p].state.pos,
                                        nodes_[i].state.pos)) {
      return fail("edge " + std::to_string(*p) + "->" + std::to_string(i) +
                  " collides");
    }
  }
  if (roots != 1) return fail(std::to_string(roots) + " roots");
  return true;
}

namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string Tree::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    out += "node " + std::to_string(i) + " " + fmt_double(n.state.pos.h) +
           " " + fmt_double(n.state.pos.v) + " " + fmt_double(n.state.theta) +
           " " + fmt_double(n.state.v) + " " + fmt_double(n.state.omega) +
           " parent=" + (n.parent ? std::to_string(*n.parent) : "none") +
           "\n";
  }
  return out;
}

std::size_t Tree::nearest_linear(const Point& q, bool skip_exhausted) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (skip_exhausted && exhausted_[i]) continue;
    const Point& p = nodes_[i].state.pos;
    const double dh = p.h - q.h;
    const double dv = p.v - q.v;
    const double d2 = dh * dh + dv * dv;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

std::size_t Tree::nearest_bucketed(const Point& q, bool skip_exhausted) const {
  // Ring search only pays off once the tree outgrows a handful of buckets.
  if (nodes_.size() <= 24) return nearest_linear(q, skip_exhausted);
  const auto qh = static_cast<std::int32_t>(std::floor(q.h / kBucketSize));
  const auto qv = static_cast<std::int32_t>(std::floor(q.v / kBucketSize));
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  const auto& table = skip_exhausted ? live_buckets_ : buckets_;
  auto scan_cell = [&](std::int32_t ch, std::int32_t cv) {
    const auto it = table.find((std::int64_t(ch) << 32) ^
                               (std::int64_t(cv) & 0xffffffff));
    if (it == table.end()) return;
    for (std::uint32_t idx : it->second) {
      const Point& p = nodes_[idx].state.pos;
      const double dh = p.h - q.h;
      const double dv = p.v - q.v;
      const double d2 = dh * dh + dv * dv;
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
  };
  // Rings below min_ring and cells outside the occupied bounding box are
  // guaranteed empty, so clip the enumeration to that box.
  const std::int32_t min_ring =
      std::max({cell_min_h_ - qh, qh - cell_max_h_, cell_min_v_ - qv,
                qv - cell_max_v_, std::int32_t{0}});
  const std::int32_t max_ring = std::max(
      {std::abs(qh - cell_min_h_), std::abs(qh - cell_max_h_),
       std::abs(qv - cell_min_v_), std::abs(qv - cell_max_v_)});
  const std::int32_t lo_h = cell_min_h_ - qh;
  const std::int32_t hi_h = cell_max_h_ - qh;
  const std::int32_t lo_v = cell_min_v_ - qv;
  const std::int32_t hi_v = cell_max_v_ - qv;
  for (std::int32_t r = min_ring; r <= max_ring; ++r) {
    // Any cell at Chebyshev ring r is at least (r-1) buckets away.
    if (r > 0 && best_d2 <= (r - 1) * kBucketSize * (r - 1) * kBucketSize) {
      break;
    }
    if (r == 0) {
      scan_cell(qh, qv);
      continue;
    }
    const std::int32_t a = std::max(-r, lo_h);
    const std::int32_t b = std::min(r, hi_h);
    if (-r >= lo_v) {
      for (std::int32_t d = a; d <= b; ++d) scan_cell(qh + d, qv - r);
    }
    if (r <= hi_v) {
      for (std::int32_t d = a; d <= b; ++d) scan_cell(qh + d, qv + r);
    }
    const std::int32_t c = std::max(-r + 1, lo_v);
    const std::int32_t e = std::min(r - 1, hi_v);
    if (-r >= lo_h) {
      for (std::int32_t d = c; d <= e; ++d) scan_cell(qh - r, qv + d);
    }
    if (r <= hi_h) {
      for (std::int32_t d = c; d <= e; ++d) scan_cell(qh + r, qv + d);
    }
  }
  return best;
}

std::size_t nearest_neighbor(const Tree& tree, const Point& q) {
  return tree.nearest_bucketed(q);
}

std::pair<double, std::size_t> dist_to_tree(const Tree& tree, const Point& q) {
  const std::size_t idx = nearest_neighbor(tree, q);
  return {distance(tree.state(idx).pos, q), idx};
}

Forest::Forest(const State& root) {
  trees_.emplace(kRootedId, Tree(TreeKind::rooted, root));
}

std::vector<std::size_t> Forest::heuristic_ids() const {
  return heuristic_order_;
}

Forest::PairRecord& Forest::record(std::size_t a, std::size_t b) {
  const PairKey key{std::min(a, b), std::max(a, b)};
  auto it = pairs_.find(key);
  if (it == pairs_.end()) {
    it = pairs_
             .emplace(key, PairRecord{std::numeric_limits<double>::infinity(),
                                      0, 0,
                                      std::numeric_limits<double>::infinity()})
             .first;
  }
  return it->second;
}

std::optional<std::pair<std::size_t, std::size_t>> Forest::closest_pair(
    std::size_t a, std::size_t b) const {
  const PairKey key{std::min(a, b), std::max(a, b)};
  const auto it = pairs_.find(key);
  if (it == pairs_.end() || !std::isfinite(it->second.dist)) {
    return std::nullopt;
  }
  if (a <= b) return std::make_pair(it->second.node_lo, it->second.node_hi);
  return std::make_pair(it->second.node_hi, it->second.node_lo);
}

void Forest::track_against_all(std::size_t tree_id, std::size_t node_idx) {
  const Point pos = trees_.at(tree_id).state(node_idx).pos;
  for (const auto& [other_id, other_tree] : trees_) {
    if (other_id == tree_id) continue;
    PairRecord& rec = record(tree_id, other_id);
    // The bounding box gives a cheap lower bound; a query that cannot
    // shrink the recorded distance is skipped.
    if (other_tree.bbox_lower_bound(pos) >= rec.dist) continue;
    const auto [d, other_idx] = dist_to_tree(other_tree, pos);
    if (d < rec.dist) {
      rec.dist = d;
      if (tree_id < other_id) {
        rec.node_lo = node_idx;
        rec.node_hi = other_idx;
      } else {
        rec.node_lo = other_idx;
        rec.node_hi = node_idx;
      }
      note_record_update(
          PairKey{std::min(tree_id, other_id), std::max(tree_id, other_id)},
          rec);
    }
  }
}

std::size_t Forest::add_heuristic_tree(Tree t) {
  if (t.kind() != TreeKind::heuristic) {
    throw std::invalid_argument("add_heuristic_tree: tree kind must be heuristic");
  }
  const std::size_t id = next_id_++;
  const std::size_t count = t.size();
  trees_.emplace(id, std::move(t));
  heuristic_order_.push_back(id);
  for (std::size_t i = 0; i < count; ++i) track_against_all(id, i);
  return id;
}

std::size_t Forest::add_node(std::size_t tree_id, const State& s,
                             std::size_t parent,
                             std::optional<ControlInput> control,
                             bool tracked) {
  const std::size_t idx = trees_.at(tree_id).add_node(s, parent, control);
  if (tracked) track_against_all(tree_id, idx);
  return idx;
}

void Forest::note_node_added(std::size_t tree_id, std::size_t node_idx) {
  track_against_all(tree_id, node_idx);
}

void Forest::remove_tree(std::size_t id) {
  if (id == kRootedId) {
    throw std::invalid_argument("remove_tree: cannot remove the rooted tree");
  }
  trees_.erase(id);
  heuristic_order_.erase(
      std::remove(heuristic_order_.begin(), heuristic_order_.end(), id),
      heuristic_order_.end());
  for (auto it = pairs_.begin(); it != pairs_.end();) {
    if (it->first.first == id || it->first.second == id) {
      within_.erase(it->first);
      it = pairs_.erase(it);
    } else {
      ++it;
    }
  }
}

void Forest::note_record_update(const PairKey& key,
                                const PairRecord& rec) const {
  if (connect_radius_ < 0.0) return;
  if (rec.dist < connect_radius_ && rec.dist < rec.blocked_below) {
    within_.insert(key);
  } else {
    within_.erase(key);
  }
}

std::optional<ConnectionEvent> Forest::poll_connection(double lambda) const {
  if (lambda != connect_radius_) {
    connect_radius_ = lambda;
    within_.clear();
    for (const auto& [key, rec] : pairs_) note_record_update(key, rec);
  }
  if (within_.empty()) return std::nullopt;
  // Heuristic ids grow in creation order, so (lo, hi) ordering visits
  // rooted pairs first and then heuristic pairs in the scan order of the
  // exhaustive reference.
  const PairKey key = *within_.begin();
  const PairRecord& rec = pairs_.at(key);
  ConnectionEvent ev;
  ev.tree_a = key.first;
  ev.tree_b = key.second;
  ev.node_a = rec.node_lo;
  ev.node_b = rec.node_hi;
  ev.distance = rec.dist;
  return ev;
}

void Forest::block_pair(std::size_t tree_a, std::size_t tree_b) {
  const PairKey key{std::min(tree_a, tree_b), std::max(tree_a, tree_b)};
  PairRecord& rec = record(tree_a, tree_b);
  rec.blocked_below = rec.dist;
  note_record_update(key, rec);
}

void Forest::merge(std::size_t dst, std::size_t dst_node, std::size_t src,
                   std::size_t src_node) {
  const Tree& src_tree = trees_.at(src);
  Tree& dst_tree = trees_.at(dst);
  std::vector<std::size_t> order;
  std::vector<std::optional<std::size_t>> new_parent;
  reroot_order(src_tree, src_node, order, new_parent);

  // Transfer src's nodes, attaching its new root under dst_node.
  const std::size_t offset = dst_tree.size();
  std::vector<std::size_t> src_to_dst(src_tree.size(), SIZE_MAX);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t parent =
        new_parent[k] ? offset + *new_parent[k] : dst_node;
    src_to_dst[order[k]] = dst_tree.add_node(src_tree.state(order[k]), parent);
  }

  // Fold src's pair records into dst's.
  for (const auto& [other_id, unused] : trees_) {
    if (other_id == src || other_id == dst) continue;
    const PairKey src_key{std::min(src, other_id), std::max(src, other_id)};
    const auto it = pairs_.find(src_key);
    if (it == pairs_.end()) continue;
    const PairRecord& src_rec = it->second;
    const std::size_t src_side =
        src == src_key.first ? src_rec.node_lo : src_rec.node_hi;
    const std::size_t other_side =
        src == src_key.first ? src_rec.node_hi : src_rec.node_lo;
    PairRecord& rec = record(dst, other_id);
    if (src_rec.dist < rec.dist) {
      rec.dist = src_rec.dist;
      const std::size_t dst_side = src_to_dst[src_side];
      if (dst < other_id) {
        rec.node_lo = dst_side;
        rec.node_hi = other_side;
      } else {
        rec.node_lo = other_side;
        rec.node_hi = dst_side;
      }
      note_record_update(
          PairKey{std::min(dst, other_id), std::max(dst, other_id)}, rec);
    }
  }
  remove_tree(src);
}

bool Forest::audit(const OccupancyGrid* grid, std::string* why) const {
  std::set<std::tuple<double, double, double, double, double>> seen;
  for (const auto& [id, t] : trees_) {
    std::string tree_why;
    if (!t.audit(grid, &tree_why)) {
      if (why) *why = "tree " + std::to_string(id) + ": " + tree_why;
      return false;
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      const State& s = t.state(i);
      if (!seen.emplace(s.pos.h, s.pos.v, s.theta, s.v, s.omega).second) {
        if (why) {
          *why = "duplicate state across trees (tree " + std::to_string(id) +
                 ", node " + std::to_string(i) + ")";
        }
        return false;
      }
    }
  }
  return true;
}

std::string Forest::serialize() const {
  std::string out;
  auto emit = [&](std::size_t id) {
    const Tree& t = trees_.at(id);
    out += "tree " + std::to_string(id) + " " +
           (t.kind() == TreeKind::rooted ? "rooted" : "heuristic") + "\n";
    out += t.serialize();
  };
  emit(kRootedId);
  for (std::size_t id : heuristic_order_) emit(id);
  return out;
}

std::optional<ConnectionEvent> detect_connection(const Forest& forest,
                                                 double lambda) {
  auto scan = [&](std::size_t a, std::size_t b)
      -> std::optional<ConnectionEvent> {
    const Tree& ta = forest.tree(a);
    const Tree& tb = forest.tree(b);
    ConnectionEvent best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ta.size(); ++i) {
      for (std::size_t j = 0; j < tb.size(); ++j) {
        const double d = distance(ta.state(i).pos, tb.state(j).pos);
        if (d < best.distance) {
          best = ConnectionEvent{a, b, i, j, d};
        }
      }
    }
    if (best.distance < lambda) return best;
    return std::nullopt;
  };
  const auto ids = forest.heuristic_ids();
  for (std::size_t hid : ids) {
    if (auto ev = scan(Forest::kRootedId, hid)) return ev;
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (auto ev = scan(ids[i], ids[j])) return ev;
    }
  }
  return std::nullopt;
}

bool merge_trees(Forest& forest, const ConnectionEvent& ev,
                 const OccupancyGrid& grid) {
  if (ev.tree_a == Forest::kRootedId || ev.tree_b == Forest::kRootedId) {
    throw std::invalid_argument(
        "merge_trees: rooted-tree events are handled by the planner");
  }
  const Point a = forest.tree(ev.tree_a).state(ev.node_a).pos;
  const Point b = forest.tree(ev.tree_b).state(ev.node_b).pos;
  if (!segment_collision_free(grid, a, b)) return false;
  forest.merge(ev.tree_a, ev.node_a, ev.tree_b, ev.node_b);
  return true;
}

}  // namespace mtrrt
