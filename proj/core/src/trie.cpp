#include "patricia/trie.hpp"

namespace patricia {

using core::as_internal;
using core::as_leaf;
using core::FlagArgs;
using core::FlagRecord;
using core::Internal;
using core::Leaf;
using core::Node;
using core::ReplaceCase;
using core::SearchResult;

namespace {

// A successful update must have swung every one of its child CAS slots.
// The winner's bookkeeping flag may lag behind its CAS, so the race-free
// witness is the slot itself: the old child can never be reinstalled.
void check_success(core::Stats& stats, const FlagRecord* rec) {
  for (uint8_t i = 0; i < rec->cas_count; ++i) {
    const uint32_t k = static_cast<uint32_t>(
        bit_at(rec->new_child[i]->label, rec->cas_parent[i]->label.length() + 1));
    if (rec->cas_parent[i]->child[k].load() == rec->old_child[i])
      stats.incomplete_success_child_cas.fetch_add(1);
  }
}

// A failed attempt performs no child CAS at all, so its flags stay final.
void check_failure(core::Stats& stats, const FlagRecord* rec) {
  for (uint8_t i = 0; i < rec->cas_count; ++i)
    if (rec->child_cas_done[i].load()) stats.failed_update_child_cas.fetch_add(1);
}

}  // namespace

Trie::Trie(uint32_t width, bool reclaim)
    : domain_(reclaim),
      core_((width >= 1 && width <= kMaxKeyWidth)
                ? width
                : throw std::invalid_argument("trie width must be in [1, 64]"),
            domain_) {}

Key Trie::checked_key(uint64_t key) const {
  const uint32_t w = core_.width();
  if (w < kMaxKeyWidth && (key >> w) != 0)
    throw std::out_of_range("key " + std::to_string(key) + " does not fit in " +
                            std::to_string(w) + " bits");
  const auto [low, high] = sentinels(w);
  if (key == low.value() || key == high.value()) throw ReservedKeyError(key);
  return Key(key, w);
}

bool Trie::contains(uint64_t key) const {
  const Key v = checked_key(key);
  auto guard = domain_.pin();
  const SearchResult s = core_.search(v);
  return core_.key_in_trie(s.node, v, s.rmvd);
}

OpResult Trie::insert(uint64_t key) {
  const Key v = checked_key(key);
  auto guard = domain_.pin();
  OpResult r;
  while (true) {
    ++r.retries;
    const SearchResult s = core_.search(v);
    if (core_.key_in_trie(s.node, v, s.rmvd)) break;

    core::Info* node_info = s.node->info.load();
    Node* copy = core_.copy_node(s.node);
    Leaf* leaf = core_.make_leaf(v.label());
    Internal* new_node = core_.create_node(copy, leaf, node_info);
    if (new_node == nullptr) {
      core_.retire_unpublished(copy);
      core_.retire_unpublished(leaf);
      continue;
    }

    FlagArgs a;
    if (s.node->internal) {
      a.flag = {s.p, as_internal(s.node)};
      a.old_info = {s.p_info, node_info};
      a.flag_count = 2;
    } else {
      a.flag = {s.p};
      a.old_info = {s.p_info};
      a.flag_count = 1;
    }
    a.unflag = {s.p};
    a.unflag_count = 1;
    a.cas_parent = {s.p};
    a.old_child = {s.node};
    a.new_child = {new_node};
    a.cas_count = 1;

    FlagRecord* rec = core_.new_flag(a);
    if (rec != nullptr && core_.help(rec)) {
      check_success(core_.stats(), rec);
      r.ok = true;
      break;
    }
    if (rec != nullptr) check_failure(core_.stats(), rec);
    core_.retire_unpublished(new_node);
    core_.retire_unpublished(copy);
    core_.retire_unpublished(leaf);
  }
  core_.stats().retries_total.fetch_add(r.retries);
  return r;
}

OpResult Trie::erase(uint64_t key) {
  const Key v = checked_key(key);
  auto guard = domain_.pin();
  OpResult r;
  while (true) {
    ++r.retries;
    const SearchResult s = core_.search(v);
    if (!core_.key_in_trie(s.node, v, s.rmvd)) break;

    Node* sibling = s.p->child[1 - bit_at(v, s.p->label.length() + 1)].load();
    if (s.gp == nullptr) continue;  // sentinels guarantee a grandparent exists

    FlagArgs a;
    a.flag = {s.gp, s.p};
    a.old_info = {s.gp_info, s.p_info};
    a.flag_count = 2;
    a.unflag = {s.gp};
    a.unflag_count = 1;
    a.cas_parent = {s.gp};
    a.old_child = {s.p};
    a.new_child = {sibling};
    a.cas_count = 1;
    a.extra_removed[0] = {s.node, nullptr};
    a.extra_removed_count[0] = 1;

    FlagRecord* rec = core_.new_flag(a);
    if (rec != nullptr && core_.help(rec)) {
      check_success(core_.stats(), rec);
      r.ok = true;
      break;
    }
    if (rec != nullptr) check_failure(core_.stats(), rec);
  }
  core_.stats().retries_total.fetch_add(r.retries);
  return r;
}

OpResult Trie::replace(uint64_t old_key, uint64_t new_key) {
  if (old_key == new_key) throw SelfReplaceError();
  const Key vd = checked_key(old_key);
  const Key vi = checked_key(new_key);
  auto guard = domain_.pin();
  OpResult r;
  while (true) {
    ++r.retries;
    const SearchResult sd = core_.search(vd);
    if (!core_.key_in_trie(sd.node, vd, sd.rmvd)) break;
    const SearchResult si = core_.search(vi);
    if (core_.key_in_trie(si.node, vi, si.rmvd)) break;

    core::Info* node_info_i = si.node->info.load();
    Node* sibling_d = sd.p->child[1 - bit_at(vd, sd.p->label.length() + 1)].load();

    FlagRecord* rec = nullptr;
    ReplaceCase dispatch = ReplaceCase::kGeneral;
    std::array<Node*, 3> created{};
    int created_count = 0;

    if (sd.gp != nullptr && si.node != sd.node && si.node != sd.p &&
        si.node != sd.gp && si.p != sd.p) {
      // General case: insert vi at its own location, then unlink vd's
      // parent, two child CAS steps. The vd leaf is flagged in between so
      // searches see it as logically removed after the first CAS.
      dispatch = ReplaceCase::kGeneral;
      Node* copy_i = core_.copy_node(si.node);
      Leaf* leaf_i = core_.make_leaf(vi.label());
      Internal* new_node_i = core_.create_node(copy_i, leaf_i, node_info_i);
      if (new_node_i == nullptr) {
        core_.retire_unpublished(copy_i);
        core_.retire_unpublished(leaf_i);
        continue;
      }
      created = {copy_i, leaf_i, new_node_i};
      created_count = 3;

      FlagArgs a;
      if (si.node->internal) {
        a.flag = {sd.gp, sd.p, si.p, as_internal(si.node)};
        a.old_info = {sd.gp_info, sd.p_info, si.p_info, node_info_i};
        a.flag_count = 4;
      } else {
        a.flag = {sd.gp, sd.p, si.p};
        a.old_info = {sd.gp_info, sd.p_info, si.p_info};
        a.flag_count = 3;
      }
      a.unflag = {sd.gp, si.p};
      a.unflag_count = 2;
      a.cas_parent = {si.p, sd.gp};
      a.old_child = {si.node, sd.p};
      a.new_child = {new_node_i, sibling_d};
      a.cas_count = 2;
      a.rmv_leaf = as_leaf(sd.node);
      a.extra_removed[1] = {sd.node, nullptr};
      a.extra_removed_count[1] = 1;
      rec = core_.new_flag(a);
    } else if (si.node == sd.node) {
      // The vi search ended on the vd leaf itself: swap it for a fresh leaf.
      dispatch = ReplaceCase::kTargetIsVictim;
      Leaf* leaf_i = core_.make_leaf(vi.label());
      created = {leaf_i};
      created_count = 1;

      FlagArgs a;
      a.flag = {sd.p};
      a.old_info = {sd.p_info};
      a.flag_count = 1;
      a.unflag = {sd.p};
      a.unflag_count = 1;
      a.cas_parent = {sd.p};
      a.old_child = {si.node};
      a.new_child = {leaf_i};
      a.cas_count = 1;
      rec = core_.new_flag(a);
    } else if ((si.node == sd.p && si.p == sd.gp) ||
               (sd.gp != nullptr && si.p == sd.p)) {
      // vi lands where vd's parent sits (or shares it): replace the parent
      // with a node joining vd's sibling and the new leaf.
      dispatch = si.node == sd.p ? ReplaceCase::kTargetIsParent
                                 : ReplaceCase::kSameParent;
      Leaf* leaf_i = core_.make_leaf(vi.label());
      Internal* new_node_i =
          core_.create_node(sibling_d, leaf_i, sibling_d->info.load());
      if (new_node_i == nullptr) {
        core_.retire_unpublished(leaf_i);
        continue;
      }
      created = {leaf_i, new_node_i};
      created_count = 2;

      FlagArgs a;
      a.flag = {sd.gp, sd.p};
      a.old_info = {sd.gp_info, sd.p_info};
      a.flag_count = 2;
      a.unflag = {sd.gp};
      a.unflag_count = 1;
      a.cas_parent = {sd.gp};
      a.old_child = {sd.p};
      a.new_child = {new_node_i};
      a.cas_count = 1;
      a.extra_removed[0] = {sd.node, nullptr};
      a.extra_removed_count[0] = 1;
      rec = core_.new_flag(a);
    } else if (si.node == sd.gp) {
      // vi diverges exactly at vd's grandparent: rebuild that subtree from
      // the two surviving siblings plus the new leaf.
      dispatch = ReplaceCase::kTargetIsGrandparent;
      Node* p_sibling_d =
          sd.gp->child[1 - bit_at(vd, sd.gp->label.length() + 1)].load();
      Internal* new_child_i = core_.create_node(sibling_d, p_sibling_d, nullptr);
      if (new_child_i == nullptr) continue;
      Leaf* leaf_i = core_.make_leaf(vi.label());
      Internal* new_node_i = core_.create_node(new_child_i, leaf_i, nullptr);
      if (new_node_i == nullptr) {
        core_.retire_unpublished(new_child_i);
        core_.retire_unpublished(leaf_i);
        continue;
      }
      created = {new_child_i, leaf_i, new_node_i};
      created_count = 3;

      FlagArgs a;
      a.flag = {si.p, sd.gp, sd.p};
      a.old_info = {si.p_info, sd.gp_info, sd.p_info};
      a.flag_count = 3;
      a.unflag = {si.p};
      a.unflag_count = 1;
      a.cas_parent = {si.p};
      a.old_child = {si.node};
      a.new_child = {new_node_i};
      a.cas_count = 1;
      a.extra_removed[0] = {sd.p, sd.node};
      a.extra_removed_count[0] = 2;
      rec = core_.new_flag(a);
    }

    if (rec != nullptr && core_.help(rec)) {
      check_success(core_.stats(), rec);
      core_.stats().replace_dispatch[static_cast<int>(dispatch)].fetch_add(1);
      r.ok = true;
      break;
    }
    if (rec != nullptr) check_failure(core_.stats(), rec);
    for (int i = 0; i < created_count; ++i) core_.retire_unpublished(created[i]);
  }
  core_.stats().retries_total.fetch_add(r.retries);
  return r;
}

}  // namespace patricia
