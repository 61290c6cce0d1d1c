#pragma once

// Lazily realized tree arena. Vertices are appended to a flat record array;
// children live contiguously in a shared pool. Offspring counts are drawn
// from a dedicated structure stream exactly once per vertex (realize-once),
// so the infection dynamics stay decoupled from the unexplored part of the
// tree: what has not been realized has not been sampled.
//
// Levels: the root sits at level 0, children at parent level + 1. On
// periodic trees the ancestor chain above the root occupies levels -1, -2,
// ... and realizeParent extends it one step at a time, creating the new
// ancestor's other children as unrealized sibling stubs.

#include <cstdint>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/rng.hpp"
#include "treecp/topology.hpp"

namespace treecp {

struct VertexRecord {
  Handle parent = kNoVertex;
  std::int32_t level = 0;        // root-relative height l(x)
  std::uint32_t depth = 0;       // graph distance |x| from the root
  std::uint16_t periodType = 0;  // schedule position; periodic trees only
  bool childrenRealized = false;
  std::uint32_t childOffset = 0;
  std::uint32_t childCount = 0;
};

class LazyTree {
 public:
  LazyTree(Topology topology, std::uint64_t structureSeed)
      : topology_(std::move(topology)), structure_(structureSeed) {
    VertexRecord root;
    root.periodType = static_cast<std::uint16_t>(topology_.rootType());
    arena_.push_back(root);
  }

  const Topology& topology() const { return topology_; }
  Handle root() const { return 0; }
  std::size_t size() const { return arena_.size(); }
  const VertexRecord& vertex(Handle v) const { return arena_[v]; }

  bool childrenRealized(Handle v) const { return arena_[v].childrenRealized; }
  std::uint32_t childCount(Handle v) const { return arena_[v].childCount; }
  Handle child(Handle v, std::uint32_t i) const { return childPool_[arena_[v].childOffset + i]; }
  Handle parent(Handle v) const { return arena_[v].parent; }
  std::int32_t level(Handle v) const { return arena_[v].level; }
  std::uint32_t depth(Handle v) const { return arena_[v].depth; }

  // Topmost realized ancestor (the root itself until realizeParent is used).
  Handle apex() const { return apex_; }

  // Draws (once) and materializes v's children; idempotent on later calls.
  // Children of a type-i periodic vertex number periods[i]; a GWPlus root has
  // exactly one child; everything else draws from the offspring law.
  std::uint32_t realizeChildren(Handle v) {
    VertexRecord& rec = arena_[v];
    if (rec.childrenRealized) return rec.childCount;
    std::uint32_t count = 0;
    switch (topology_.kind()) {
      case TopologyKind::Periodic:
        count = topology_.periods()[rec.periodType];
        break;
      case TopologyKind::GWPlus:
        count = v == 0 ? 1 : topology_.law().sample(structure_);
        break;
      case TopologyKind::GW:
        count = topology_.law().sample(structure_);
        break;
    }
    std::uint32_t offset = static_cast<std::uint32_t>(childPool_.size());
    std::int32_t childLevel = rec.level + 1;
    std::uint32_t childDepth = rec.depth + 1;
    std::uint16_t childType = 0;
    if (topology_.kind() == TopologyKind::Periodic)
      childType = static_cast<std::uint16_t>((rec.periodType + 1) % topology_.kappa());
    for (std::uint32_t i = 0; i < count; ++i) {
      VertexRecord c;
      c.parent = v;
      c.level = childLevel;
      c.depth = childDepth;
      c.periodType = childType;
      childPool_.push_back(static_cast<Handle>(arena_.size()));
      arena_.push_back(c);
    }
    // re-fetch: arena_ may have reallocated
    arena_[v].childOffset = offset;
    arena_[v].childCount = count;
    arena_[v].childrenRealized = true;
    return count;
  }

  // Extends the ancestor chain by one: creates the parent of the current
  // apex together with that parent's other children as fresh stubs. Periodic
  // trees only; GW and GWPlus grow strictly downward.
  Handle realizeParent(Handle v) {
    if (!topology_.upwardGrowth())
      throw Error("realizeParent: this topology has no ancestors above the root");
    if (v != apex_) throw Error("realizeParent: vertex is not the current apex");
    const std::uint32_t kappa = topology_.kappa();
    VertexRecord& apexRec = arena_[v];
    VertexRecord p;
    p.level = apexRec.level - 1;
    p.depth = apexRec.depth + 1;
    p.periodType = static_cast<std::uint16_t>((apexRec.periodType + kappa - 1) % kappa);
    Handle ph = static_cast<Handle>(arena_.size());
    arena_.push_back(p);
    arena_[v].parent = ph;

    // Children of the new apex: the old apex first, then its siblings.
    std::uint32_t count = topology_.periods()[arena_[ph].periodType];
    std::uint32_t offset = static_cast<std::uint32_t>(childPool_.size());
    childPool_.push_back(v);
    for (std::uint32_t i = 1; i < count; ++i) {
      VertexRecord s;
      s.parent = ph;
      s.level = arena_[ph].level + 1;
      s.depth = arena_[ph].depth + 1;
      s.periodType = arena_[v].periodType;
      childPool_.push_back(static_cast<Handle>(arena_.size()));
      arena_.push_back(s);
    }
    arena_[ph].childOffset = offset;
    arena_[ph].childCount = count;
    arena_[ph].childrenRealized = true;
    apex_ = ph;
    return ph;
  }

  // e_n: the distinguished descendant chain through first children,
  // realizing levels on demand. n = 0 is the root.
  Handle chainDescendant(std::uint32_t n) {
    Handle v = root();
    for (std::uint32_t i = 0; i < n; ++i) {
      realizeChildren(v);
      if (childCount(v) == 0) throw Error("chainDescendant: law produced a leaf");
      v = child(v, 0);
    }
    return v;
  }

  bool isAncestorOrSelf(Handle a, Handle v) const {
    while (true) {
      if (v == a) return true;
      if (arena_[v].level <= arena_[a].level) return false;
      v = arena_[v].parent;
      if (v == kNoVertex) return false;
    }
  }

  // Graph distance between two realized vertices (they share the apex as a
  // common ancestor, so the parent-chain meet is always realized).
  std::uint32_t distance(Handle a, Handle b) const {
    std::uint32_t d = 0;
    while (arena_[a].level > arena_[b].level) a = arena_[a].parent, ++d;
    while (arena_[b].level > arena_[a].level) b = arena_[b].parent, ++d;
    while (a != b) {
      a = arena_[a].parent;
      b = arena_[b].parent;
      d += 2;
    }
    return d;
  }

  // First vertex on the path from `from` toward `to` (both realized,
  // from != to).
  Handle stepToward(Handle from, Handle to) const {
    if (isAncestorOrSelf(from, to)) {
      // descend: lift `to` until its parent is `from`
      while (arena_[to].parent != from) to = arena_[to].parent;
      return to;
    }
    return arena_[from].parent;
  }

 private:
  Topology topology_;
  RngStream structure_;
  std::vector<VertexRecord> arena_;
  std::vector<Handle> childPool_;
  Handle apex_ = 0;
};

}  // namespace treecp
