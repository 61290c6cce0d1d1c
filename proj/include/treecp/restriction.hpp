#pragma once

// Spatial restrictions: the process only ever offers infection arrows to the
// in-restriction neighbors of a vertex, so a restricted run is exactly the
// contact process on the induced subgraph. The NeighborTable materializes
// each vertex's in-restriction neighbor list once, on first infection, which
// is also the moment the tree realizes that vertex's children — unexplored
// structure stays unsampled until the infection actually reaches it.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/lazy_tree.hpp"

namespace treecp {

enum class RestrictionKind { None, Subtree, SubtreePlusBranch, Ball, Path };

class Restriction {
 public:
  static Restriction none() { return Restriction(RestrictionKind::None); }

  // Subtree rooted at r (r plus all descendants).
  static Restriction subtree(Handle r) {
    Restriction out(RestrictionKind::Subtree);
    out.a_ = r;
    return out;
  }

  // x plus the full subtree of x's first child; the process is seeded at x.
  static Restriction subtreePlusBranch(Handle x) {
    Restriction out(RestrictionKind::SubtreePlusBranch);
    out.a_ = x;
    return out;
  }

  static Restriction ball(Handle center, std::uint32_t radius) {
    Restriction out(RestrictionKind::Ball);
    out.a_ = center;
    out.radius_ = radius;
    return out;
  }

  // The unique tree path from `from` to `to`, endpoints included.
  static Restriction path(Handle from, Handle to) {
    Restriction out(RestrictionKind::Path);
    out.a_ = from;
    out.b_ = to;
    return out;
  }

  RestrictionKind kind() const { return kind_; }
  Handle vertexA() const { return a_; }
  Handle vertexB() const { return b_; }
  std::uint32_t radius() const { return radius_; }

  std::string format() const {
    switch (kind_) {
      case RestrictionKind::None:
        return "none";
      case RestrictionKind::Subtree:
        return "subtree:" + std::to_string(a_);
      case RestrictionKind::SubtreePlusBranch:
        return "branch:" + std::to_string(a_);
      case RestrictionKind::Ball:
        return "ball:" + std::to_string(a_) + "," + std::to_string(radius_);
      case RestrictionKind::Path:
        return "path:" + std::to_string(a_) + "," + std::to_string(b_);
    }
    return "none";
  }

 private:
  explicit Restriction(RestrictionKind kind) : kind_(kind) {}

  RestrictionKind kind_;
  Handle a_ = kNoVertex;
  Handle b_ = kNoVertex;
  std::uint32_t radius_ = 0;
};

// Per-run cache of in-restriction adjacency. degree()/neighbor() realize the
// vertex's surroundings on first use (children always — the frontier needs
// them — and, on periodic trees, the parent of the current apex when the
// restriction can reach it), then freeze the neighbor list; the degree of a
// vertex never changes once the infection has touched it.
class NeighborTable {
 public:
  NeighborTable(LazyTree& tree, const Restriction& restriction)
      : tree_(tree), restr_(restriction) {
    auto check = [&](Handle h) {
      if (h >= tree_.size()) throw ConfigError("restriction references an unknown vertex");
    };
    switch (restr_.kind()) {
      case RestrictionKind::None:
        anchor_ = tree_.root();
        break;
      case RestrictionKind::Subtree:
        check(restr_.vertexA());
        anchor_ = restr_.vertexA();
        break;
      case RestrictionKind::SubtreePlusBranch:
        check(restr_.vertexA());
        anchor_ = restr_.vertexA();
        tree_.realizeChildren(anchor_);
        if (tree_.childCount(anchor_) == 0)
          throw ConfigError("branch restriction anchored at a leaf");
        branchChild_ = tree_.child(anchor_, 0);
        break;
      case RestrictionKind::Ball:
        check(restr_.vertexA());
        anchor_ = restr_.vertexA();
        break;
      case RestrictionKind::Path: {
        check(restr_.vertexA());
        check(restr_.vertexB());
        Handle cur = restr_.vertexA();
        path_.push_back(cur);
        while (cur != restr_.vertexB()) {
          cur = tree_.stepToward(cur, restr_.vertexB());
          path_.push_back(cur);
        }
        for (std::size_t i = 0; i < path_.size(); ++i) pathIndex_[path_[i]] = i;
        anchor_ = restr_.vertexA();
        break;
      }
    }
  }

  NeighborTable(const NeighborTable&) = delete;
  NeighborTable& operator=(const NeighborTable&) = delete;

  LazyTree& tree() { return tree_; }
  const LazyTree& tree() const { return tree_; }
  const Restriction& restriction() const { return restr_; }

  // The initially infected vertex: root, subtree root, branch vertex, ball
  // center, or path start.
  Handle anchor() const { return anchor_; }

  const std::vector<Handle>& pathVertices() const { return path_; }

  bool contains(Handle v) const {
    switch (restr_.kind()) {
      case RestrictionKind::None:
        return true;
      case RestrictionKind::Subtree:
        return tree_.isAncestorOrSelf(restr_.vertexA(), v);
      case RestrictionKind::SubtreePlusBranch:
        return v == anchor_ || tree_.isAncestorOrSelf(branchChild_, v);
      case RestrictionKind::Ball:
        return tree_.distance(v, restr_.vertexA()) <= restr_.radius();
      case RestrictionKind::Path:
        return pathIndex_.count(v) != 0;
    }
    return false;
  }

  std::uint32_t degree(Handle v) { return ensure(v).count; }

  Handle neighbor(Handle v, std::uint32_t i) {
    const Meta& m = ensure(v);
    return pool_[m.offset + i];
  }

 private:
  struct Meta {
    std::uint32_t offset = 0;
    std::uint32_t count = 0;
    bool active = false;
  };

  const Meta& ensure(Handle v) {
    if (v < meta_.size() && meta_[v].active) return meta_[v];
    tree_.realizeChildren(v);
    if (tree_.topology().upwardGrowth() && v == tree_.apex() && parentReachable(v))
      tree_.realizeParent(v);
    if (meta_.size() < tree_.size()) meta_.resize(tree_.size());
    Meta m;
    m.offset = static_cast<std::uint32_t>(pool_.size());
    buildNeighbors(v);
    m.count = static_cast<std::uint32_t>(pool_.size()) - m.offset;
    m.active = true;
    meta_[v] = m;
    return meta_[v];
  }

  // Whether the restriction can ever hand v's parent an infection, i.e.
  // whether the apex chain has to be extended before v's list is frozen.
  bool parentReachable(Handle v) const {
    switch (restr_.kind()) {
      case RestrictionKind::None:
        return true;
      case RestrictionKind::Ball:
        return tree_.distance(v, restr_.vertexA()) < restr_.radius();
      default:
        return false;
    }
  }

  void buildNeighbors(Handle v) {
    switch (restr_.kind()) {
      case RestrictionKind::None:
        if (tree_.parent(v) != kNoVertex) pool_.push_back(tree_.parent(v));
        appendChildren(v);
        break;
      case RestrictionKind::Subtree:
        if (v != anchor_) pool_.push_back(tree_.parent(v));
        appendChildren(v);
        break;
      case RestrictionKind::SubtreePlusBranch:
        if (v == anchor_) {
          pool_.push_back(branchChild_);
          break;
        }
        pool_.push_back(tree_.parent(v));
        appendChildren(v);
        break;
      case RestrictionKind::Ball: {
        std::uint32_t d = tree_.distance(v, restr_.vertexA());
        if (d < restr_.radius()) {
          if (tree_.parent(v) != kNoVertex) pool_.push_back(tree_.parent(v));
          appendChildren(v);
        } else if (d == restr_.radius() && d > 0) {
          // boundary vertex: only the neighbor toward the center is inside
          pool_.push_back(tree_.stepToward(v, restr_.vertexA()));
        }
        break;
      }
      case RestrictionKind::Path: {
        std::size_t i = pathIndex_.at(v);
        if (i > 0) pool_.push_back(path_[i - 1]);
        if (i + 1 < path_.size()) pool_.push_back(path_[i + 1]);
        break;
      }
    }
  }

  void appendChildren(Handle v) {
    for (std::uint32_t i = 0; i < tree_.childCount(v); ++i) pool_.push_back(tree_.child(v, i));
  }

  LazyTree& tree_;
  Restriction restr_;
  Handle anchor_ = 0;
  Handle branchChild_ = kNoVertex;
  std::vector<Handle> path_;
  std::unordered_map<Handle, std::size_t> pathIndex_;
  std::vector<Meta> meta_;
  std::vector<Handle> pool_;
};

}  // namespace treecp
