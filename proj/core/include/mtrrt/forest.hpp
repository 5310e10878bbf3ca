#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtrrt/kinodynamics.hpp"
#include "mtrrt/workspace.hpp"

namespace mtrrt {

enum class TreeKind { rooted, heuristic };

struct TreeNode {
  State state;
  std::optional<std::size_t> parent;     // root has none
  std::optional<ControlInput> control;   // control that produced the node
                                         // from its parent (kinodynamic
                                         // edges only)
};

/// Rooted search tree. Node 0 is the root; parent index < child index.
class Tree {
 public:
  Tree(TreeKind kind, const State& root);

  TreeKind kind() const { return kind_; }
  std::size_t size() const { return nodes_.size(); }
  const State& state(std::size_t i) const { return nodes_[i].state; }
  std::optional<std::size_t> parent(std::size_t i) const {
    return nodes_[i].parent;
  }
  std::optional<ControlInput> control(std::size_t i) const {
    return nodes_[i].control;
  }

  /// Appends a node under `parent`. The caller has already collision-
  /// checked the edge. Throws std::out_of_range on a bad parent index.
  std::size_t add_node(const State& s, std::size_t parent,
                       std::optional<ControlInput> control = std::nullopt);

  /// Copy of this tree re-rooted at `new_root`: nodes renumbered in
  /// traversal order from the new root, parent links reversed along the
  /// old root path. Geometry and adjacency are unchanged.
  Tree rerooted(std::size_t new_root) const;

  /// Checks single-root, parent<child ordering, root reachability, and
  /// (when a grid is given) edge collision-freeness.
  bool audit(const OccupancyGrid* grid, std::string* why = nullptr) const;

  /// Line format: "node <id> <h> <v> <theta> <v> <omega> parent=<id|none>"
  std::string serialize() const;

  /// Exhaustive scan; the reference the bucket index is tested against.
  std::size_t nearest_linear(const Point& q,
                             bool skip_exhausted = false) const;

  /// A node's candidate controls are a fixed function of its own state, so
  /// a control that was committed once or shown to collide once never needs
  /// another look. Each node carries a bitmask of spent controls; a node
  /// with every control spent is exhausted and invisible to
  /// nearest_extendable. Masks cover up to 64 controls per node.
  std::uint64_t spent_controls(std::size_t i) const { return spent_[i]; }
  void spend_control(std::size_t i, unsigned control, unsigned total);
  bool exhausted(std::size_t i) const { return exhausted_[i] != 0; }
  std::size_t exhausted_count() const { return exhausted_count_; }

  /// Nearest node that still has an unspent control. Precondition:
  /// exhausted_count() < size().
  std::size_t nearest_extendable(const Point& q) const;

  /// Distance from q to the tree's occupied-cell bounding box; a lower
  /// bound on the distance to every node.
  double bbox_lower_bound(const Point& q) const;

 private:
  Tree() = default;
  friend class Forest;
  friend std::size_t nearest_neighbor(const Tree&, const Point&);

  std::size_t insert_node(TreeNode node);

  // Uniform-grid bucket index over node positions; an optimization of
  // nearest_linear, never a semantic change (ties still go to the
  // lowest index).
  static constexpr double kBucketSize = 16.0;
  static std::int64_t bucket_key(double h, double v);
  std::size_t nearest_bucketed(const Point& q,
                               bool skip_exhausted = false) const;

  TreeKind kind_;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint64_t> spent_;
  std::vector<char> exhausted_;
  std::size_t exhausted_count_ = 0;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets_;
  // Same layout as buckets_ minus exhausted nodes, so skip searches never
  // rescan dead frontier.
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> live_buckets_;
  std::int32_t cell_min_h_ = 0, cell_max_h_ = 0;
  std::int32_t cell_min_v_ = 0, cell_max_v_ = 0;
};

/// Index of the tree node nearest to q (Euclidean over positions, ties
/// to the lowest index).
std::size_t nearest_neighbor(const Tree& tree, const Point& q);

/// (distance, node index) of the nearest node.
std::pair<double, std::size_t> dist_to_tree(const Tree& tree, const Point& q);

struct ConnectionEvent {
  std::size_t tree_a = 0;  // stable tree id; 0 is always the rooted tree
  std::size_t tree_b = 0;
  std::size_t node_a = 0;
  std::size_t node_b = 0;
  double distance = 0.0;
};

/// One rooted tree plus zero or more heuristic trees, pairwise
/// node-disjoint. Trees carry stable ids (rooted = 0) that survive
/// deletions. Insertions feed an incremental pair-distance tracker so
/// connection detection needs no full rescan; detect_connection() is the
/// brute-force reference it is tested against.
class Forest {
 public:
  explicit Forest(const State& root);

  static constexpr std::size_t kRootedId = 0;

  Tree& rooted() { return trees_.at(kRootedId); }
  const Tree& rooted() const { return trees_.at(kRootedId); }

  Tree& tree(std::size_t id) { return trees_.at(id); }
  const Tree& tree(std::size_t id) const { return trees_.at(id); }
  bool has_tree(std::size_t id) const { return trees_.count(id) != 0; }

  std::size_t heuristic_count() const { return trees_.size() - 1; }
  /// Heuristic tree ids in creation order.
  std::vector<std::size_t> heuristic_ids() const;

  /// Registers a heuristic tree; returns its stable id.
  std::size_t add_heuristic_tree(Tree t);

  /// Appends a node to a tree and, unless `tracked` is false, updates the
  /// proximity tracker. Untracked adds suit planners that have stopped
  /// consuming connection events.
  std::size_t add_node(std::size_t tree_id, const State& s, std::size_t parent,
                       std::optional<ControlInput> control = std::nullopt,
                       bool tracked = true);

  /// Tracker hook for nodes inserted directly on a Tree reference
  /// (extend() does this to the rooted tree).
  void note_node_added(std::size_t tree_id, std::size_t node_idx);

  void remove_tree(std::size_t id);

  /// First tracked pair closer than lambda, rooted pairs first, then
  /// heuristic pairs in creation order. Pairs suppressed after a failed
  /// merge stay silent until a strictly closer node pair appears.
  std::optional<ConnectionEvent> poll_connection(double lambda) const;

  /// Suppresses the pair at its current distance (failed merge).
  void block_pair(std::size_t tree_a, std::size_t tree_b);

  /// Merges heuristic tree `src` into `dst`, re-rooting src at
  /// `src_node` and attaching it under dst's `dst_node`.
  void merge(std::size_t dst, std::size_t dst_node, std::size_t src,
             std::size_t src_node);

  /// Closest tracked node pair between trees a and b, as (node in a,
  /// node in b), or nullopt if nothing has been tracked for the pair yet.
  std::optional<std::pair<std::size_t, std::size_t>> closest_pair(
      std::size_t a, std::size_t b) const;

  /// Node-disjointness plus every per-tree audit.
  bool audit(const OccupancyGrid* grid, std::string* why = nullptr) const;

  std::string serialize() const;

 private:
  struct PairRecord {
    double dist;
    std::size_t node_lo;  // node in the lower-id tree
    std::size_t node_hi;
    double blocked_below;  // report only when dist < blocked_below
  };
  using PairKey = std::pair<std::size_t, std::size_t>;  // (lo, hi)

  PairRecord& record(std::size_t a, std::size_t b);
  void track_against_all(std::size_t tree_id, std::size_t node_idx);
  // Keeps the eligible-pair cache in sync after any record mutation.
  void note_record_update(const PairKey& key, const PairRecord& rec) const;

  std::map<std::size_t, Tree> trees_;
  std::vector<std::size_t> heuristic_order_;
  std::map<PairKey, PairRecord> pairs_;
  std::size_t next_id_ = 1;

  // Cache of pairs currently reportable at the last polled radius, in the
  // same (lo, hi) order the exhaustive scan uses. Distances only shrink
  // and blocking only removes, so incremental upkeep is sound.
  mutable double connect_radius_ = -1.0;
  mutable std::set<PairKey> within_;
};

/// Brute-force connection scan: rooted x heuristic pairs in creation
/// order, then heuristic x heuristic; first pair with min inter-node
/// distance < lambda wins.
std::optional<ConnectionEvent> detect_connection(const Forest& forest,
                                                 double lambda);

/// Alg.-4 Connect-Trees merge for two heuristic trees: collision-checks
/// the bridging segment, and on success re-roots ev.tree_b at ev.node_b,
/// attaches it under ev.node_a, and drops tree_b from the forest.
/// Returns false (forest unchanged) when the bridge collides.
bool merge_trees(Forest& forest, const ConnectionEvent& ev,
                 const OccupancyGrid& grid);

}  // namespace mtrrt
