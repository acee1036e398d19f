#include "patricia/core.hpp"

#include <algorithm>
#include <vector>

namespace patricia::core {

TrieCore::TrieCore(uint32_t width, reclamation::Domain& domain)
    : width_(width), domain_(domain) {
  assert(width >= 1 && width <= kMaxKeyWidth);
  auto [zeros, ones] = sentinels(width);
  Leaf* low = make_leaf(zeros.label());
  Leaf* high = make_leaf(ones.label());
  root_ = make_internal(Label(), low, high);
}

TrieCore::~TrieCore() {
  // Teardown requires quiescence; frees the reachable graph directly.
  std::vector<Node*> stack{root_};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (n->internal) {
      Internal* in = as_internal(n);
      stack.push_back(in->child[0].load());
      stack.push_back(in->child[1].load());
    }
    Info* inf = n->info.load();
    if (!inf->is_flag) destroy(inf);
    destroy(n);
  }
}

UnflagRecord* TrieCore::make_unflag() {
  domain_.count_alloc();
  return new UnflagRecord();
}

Leaf* TrieCore::make_leaf(const Label& l) {
  domain_.count_alloc();
  return new Leaf(l, next_node_id_.fetch_add(1), make_unflag());
}

Internal* TrieCore::make_internal(const Label& l, Node* c0, Node* c1) {
  domain_.count_alloc();
  return new Internal(l, next_node_id_.fetch_add(1), make_unflag(), c0, c1);
}

Node* TrieCore::copy_node(const Node* n) {
  if (!n->internal) return make_leaf(n->label);
  const Internal* in = as_internal(n);
  return make_internal(n->label, in->child[0].load(), in->child[1].load());
}

void TrieCore::destroy(Node* n) {
  domain_.count_free_direct();
  if (n->internal)
    delete as_internal(n);
  else
    delete as_leaf(n);
}

void TrieCore::destroy(Info* i) {
  domain_.count_free_direct();
  if (i->is_flag)
    delete static_cast<FlagRecord*>(i);
  else
    delete static_cast<UnflagRecord*>(i);
}

void TrieCore::retire_unpublished(Node* n) {
  Info* inf = n->info.load();
  assert(!inf->is_flag);
  domain_.retire(static_cast<UnflagRecord*>(inf));
  if (n->internal)
    domain_.retire(as_internal(n));
  else
    domain_.retire(as_leaf(n));
}

SearchResult TrieCore::search(const Key& v) const {
  assert(v.width() == width_);
  SearchResult r;
  r.node = root_;
  while (r.node->internal && is_prefix(r.node->label, v)) {
    ++r.iterations;
    r.gp = r.p;
    r.gp_info = r.p_info;
    r.p = as_internal(r.node);
    r.p_info = r.p->info.load();  // info strictly before child
    r.node = r.p->child[bit_at(v, r.p->label.length() + 1)].load();
  }
  if (!r.node->internal) r.rmvd = logically_removed(r.node->info.load());
  stats_.note_search_iterations(r.iterations);
  assert(r.iterations <= width_);
  return r;
}

bool TrieCore::logically_removed(const Info* info) const {
  if (!info->is_flag) return false;
  const FlagRecord* rec = static_cast<const FlagRecord*>(info);
  assert(rec->cas_count >= 1);
  Node* c0 = rec->cas_parent[0]->child[0].load();
  Node* c1 = rec->cas_parent[0]->child[1].load();
  return rec->old_child[0] != c0 && rec->old_child[0] != c1;
}

Internal* TrieCore::create_node(Node* n1, Node* n2, Info* info) {
  assert(n1 != nullptr && n2 != nullptr);
  if (is_prefix(n1->label, n2->label) || is_prefix(n2->label, n1->label)) {
    if (info != nullptr && info->is_flag) help(static_cast<FlagRecord*>(info));
    return nullptr;
  }
  const Label prefix = longest_common_prefix(n1->label, n2->label);
  const uint32_t branch = prefix.length() + 1;
  Node* c0 = bit_at(n1->label, branch) == 0 ? n1 : n2;
  Node* c1 = c0 == n1 ? n2 : n1;
  return make_internal(prefix, c0, c1);
}

FlagRecord* TrieCore::new_flag(const FlagArgs& args) {
  for (uint8_t i = 0; i < args.flag_count; ++i) {
    if (args.old_info[i]->is_flag) {
      help(static_cast<FlagRecord*>(args.old_info[i]));
      return nullptr;
    }
  }
  for (uint8_t i = 0; i < args.flag_count; ++i)
    for (uint8_t j = static_cast<uint8_t>(i + 1); j < args.flag_count; ++j)
      if (args.flag[i] == args.flag[j] && args.old_info[i] != args.old_info[j])
        return nullptr;

  FlagRecord* rec = new FlagRecord();
  domain_.count_alloc();

  for (uint8_t i = 0; i < args.flag_count; ++i) {
    bool dup = false;
    for (uint8_t j = 0; j < rec->flag_count; ++j)
      if (rec->flag_targets[j] == args.flag[i]) dup = true;
    if (dup) continue;
    rec->flag_targets[rec->flag_count] = args.flag[i];
    rec->old_info[rec->flag_count] = args.old_info[i];
    ++rec->flag_count;
  }
  for (uint8_t i = 0; i < args.unflag_count; ++i) {
    bool dup = false;
    for (uint8_t j = 0; j < rec->unflag_count; ++j)
      if (rec->unflag_targets[j] == args.unflag[i]) dup = true;
    if (dup) continue;
    rec->unflag_targets[rec->unflag_count] = args.unflag[i];
    ++rec->unflag_count;
  }

  // Insertion sort of flag targets by label order, old_info permuted along.
  // Reachable nodes have distinct labels; the address tiebreak only matters
  // if that invariant were broken.
  for (uint8_t i = 1; i < rec->flag_count; ++i) {
    Internal* t = rec->flag_targets[i];
    Info* o = rec->old_info[i];
    int j = i - 1;
    auto before = [](Internal* a, Internal* b) {
      auto ord = label_order(a->label, b->label);
      if (ord != std::strong_ordering::equal) return ord == std::strong_ordering::less;
      return a < b;
    };
    while (j >= 0 && before(t, rec->flag_targets[j])) {
      rec->flag_targets[j + 1] = rec->flag_targets[j];
      rec->old_info[j + 1] = rec->old_info[j];
      --j;
    }
    rec->flag_targets[j + 1] = t;
    rec->old_info[j + 1] = o;
  }

  rec->cas_count = args.cas_count;
  for (uint8_t i = 0; i < args.cas_count; ++i) {
    rec->cas_parent[i] = args.cas_parent[i];
    rec->old_child[i] = args.old_child[i];
    rec->new_child[i] = args.new_child[i];
    rec->extra_removed[i] = args.extra_removed[i];
    rec->extra_removed_count[i] = args.extra_removed_count[i];
  }
  rec->rmv_leaf = args.rmv_leaf;
  return rec;
}

void TrieCore::retire_old_info(FlagRecord* rec, uint8_t index) {
  if (rec->old_info_retired[index].exchange(true)) return;
  Info* old = rec->old_info[index];
  assert(!old->is_flag);
  domain_.retire(static_cast<UnflagRecord*>(old));
}

// Records evidence that old_info[index] was superseded by a flag CAS. A
// helper that raced past the completion claim retires it here; otherwise
// the claim loop does. Exactly-once via retire_old_info's exchange.
void TrieCore::note_superseded(FlagRecord* rec, uint8_t index, bool observed_in_order) {
  if (observed_in_order) {
    const uint32_t below = (uint32_t{1} << index) - 1;
    const uint32_t prev = rec->observed_mask.fetch_or(uint32_t{1} << index);
    if ((prev & below) != below) stats_.flag_order_violations.fetch_add(1);
  }
  rec->superseded_mask.fetch_or(uint32_t{1} << index);
  if (rec->completion_claimed.load()) retire_old_info(rec, index);
}

void TrieCore::retire_removed_node(FlagRecord* rec, Node* n) {
  if (n->internal) {
    // Removed internal nodes stay flagged by rec forever; the record's own
    // completion claim covers that info.
    domain_.retire(as_internal(n));
    return;
  }
  Leaf* leaf = as_leaf(n);
  if (leaf != rec->rmv_leaf) {
    // No writer can touch this leaf's info slot any more.
    Info* inf = leaf->info.load();
    if (!inf->is_flag) domain_.retire(static_cast<UnflagRecord*>(inf));
  }
  domain_.retire(leaf);
}

// Retirement of the nodes a child CAS unlinked is deferred to the record's
// completion: a helper that acquired the record before completion may still
// use old_child[slot] as a CAS expected value, so its address must not be
// recycled until every such helper has unpinned.
void TrieCore::retire_removed(FlagRecord* rec, uint8_t slot) {
  if (rec->removed_retired[slot].exchange(true)) return;
  retire_removed_node(rec, rec->old_child[slot]);
  for (uint8_t j = 0; j < rec->extra_removed_count[slot]; ++j)
    retire_removed_node(rec, rec->extra_removed[slot][j]);
}

bool TrieCore::help(FlagRecord* rec) {
  stats_.help_invocations.fetch_add(1);
  rec->help_calls.fetch_add(1);

  bool do_child_cas = true;
  for (uint8_t i = 0; i < rec->flag_count && do_child_cas; ++i) {
    Info* expected = rec->old_info[i];
    rec->flag_targets[i]->info.compare_exchange_strong(expected, rec);  // flag CAS
    do_child_cas = (rec->flag_targets[i]->info.load() == rec);
    if (do_child_cas) note_superseded(rec, i, true);
  }

  if (do_child_cas) {
    rec->flag_done.store(true);
    if (rec->rmv_leaf != nullptr) {
      // Leaf flagging is a plain overwrite, not a CAS.
      Info* prev = rec->rmv_leaf->info.exchange(rec);
      if (!prev->is_flag) domain_.retire(static_cast<UnflagRecord*>(prev));
    }
    for (uint8_t i = 0; i < rec->cas_count; ++i) {
      const uint32_t k = static_cast<uint32_t>(
          bit_at(rec->new_child[i]->label, rec->cas_parent[i]->label.length() + 1));
      Node* expected = rec->old_child[i];
      if (rec->cas_parent[i]->child[k].compare_exchange_strong(
              expected, rec->new_child[i])) {  // child CAS
        if (rec->child_cas_done[i].exchange(true)) stats_.child_cas_double_wins.fetch_add(1);
        if (rec->completion_claimed.load()) retire_removed(rec, i);
      }
    }
  }

  bool outcome;
  if (rec->flag_done.load()) {
    for (int i = rec->unflag_count - 1; i >= 0; --i) {
      UnflagRecord* fresh = make_unflag();
      Info* expected = rec;
      if (!rec->unflag_targets[i]->info.compare_exchange_strong(expected, fresh))  // unflag CAS
        destroy(fresh);
    }
    outcome = true;
  } else {
    for (int i = rec->flag_count - 1; i >= 0; --i) {
      UnflagRecord* fresh = make_unflag();
      Info* expected = rec;
      if (rec->flag_targets[i]->info.compare_exchange_strong(expected, fresh)) {  // backtrack CAS
        // Winning the backtrack proves this node was flagged even if no
        // helper's in-order check saw it.
        note_superseded(rec, static_cast<uint8_t>(i), false);
      } else {
        destroy(fresh);
      }
    }
    outcome = false;
  }

  // First completed call retires the record, the old info values its flag
  // CAS steps superseded, and the nodes its child CAS steps unlinked. Anyone
  // still holding the record pinned its guard before this point, so the
  // grace period covers them; after this point the record is no longer
  // reachable from any live info slot.
  if (!rec->completion_claimed.exchange(true)) {
    const uint32_t observed = rec->observed_mask.load();
    if ((observed & (observed + 1)) != 0)  // flag successes form a prefix
      stats_.flag_order_violations.fetch_add(1);
    const uint32_t superseded = rec->superseded_mask.load();
    for (uint8_t i = 0; i < rec->flag_count; ++i)
      if (superseded & (uint32_t{1} << i)) retire_old_info(rec, i);
    for (uint8_t i = 0; i < rec->cas_count; ++i)
      if (rec->child_cas_done[i].load()) retire_removed(rec, i);
    domain_.retire(rec);
  }
  return outcome;
}

}  // namespace patricia::core
