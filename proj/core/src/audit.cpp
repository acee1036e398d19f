#include "patricia/audit.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace patricia::harness {

namespace {

using core::Internal;
using core::Leaf;
using core::Node;

std::string label_text(const Label& l) {
  return l.empty() ? std::string("<eps>") : l.to_string();
}

void dump_node(const core::TrieCore& core, const Node* n, int depth, bool with_ids,
               std::ostream& out) {
  for (int i = 0; i < depth; ++i) out << "  ";
  out << (n->internal ? "internal" : "leaf");
  if (with_ids) out << " id=" << n->id;
  out << " label=" << label_text(n->label);
  const core::Info* info = n->info.load();
  if (info->is_flag) {
    const auto* rec = static_cast<const core::FlagRecord*>(info);
    out << " flag(done=" << (rec->flag_done.load() ? "true" : "false") << ")";
  } else {
    out << " unflag";
  }
  if (!n->internal && core.logically_removed(info)) out << " removed";
  out << '\n';
  if (n->internal) {
    const Internal* in = core::as_internal(n);
    for (int i = 0; i < 2; ++i) {
      const Node* c = in->child[i].load();
      if (c == nullptr) {
        for (int j = 0; j < depth + 1; ++j) out << "  ";
        out << "<null>\n";
      } else {
        dump_node(core, c, depth + 1, with_ids, out);
      }
    }
  }
}

}  // namespace

std::string dump_tree(const Trie& trie, bool with_ids) {
  std::ostringstream out;
  dump_node(trie.core(), trie.core().root(), 0, with_ids, out);
  return out.str();
}

AuditReport quiescent_audit(const Trie& trie) {
  const core::TrieCore& core = trie.core();
  const uint32_t width = core.width();
  AuditReport report;
  auto fail = [&](std::string what) {
    report.ok = false;
    report.violations.push_back(std::move(what));
  };

  std::unordered_map<const Node*, int> in_degree;
  std::map<std::string, int> label_count;
  bool low_sentinel = false;
  bool high_sentinel = false;
  const auto [low, high] = sentinels(width);

  std::vector<const Node*> stack{core.root()};
  std::unordered_set<const Node*> visited;
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!visited.insert(n).second) continue;

    report.reachable_ids.push_back(n->id);
    ++label_count[n->label.to_string()];

    if (n->internal) {
      if (n->label.length() >= width)
        fail("internal label at least key width: " + label_text(n->label));
      const Internal* in = core::as_internal(n);
      for (int i = 0; i < 2; ++i) {
        const Node* c = in->child[i].load();
        if (c == nullptr) {
          fail("null child " + std::to_string(i) + " under " + label_text(n->label));
          continue;
        }
        if (!is_prefix(n->label.with_bit(i), c->label))
          fail("prefix violation: child " + std::to_string(i) + " of " +
               label_text(n->label) + " is " + label_text(c->label));
        ++in_degree[c];
        stack.push_back(c);
      }
    } else {
      if (n->label.length() != width)
        fail("leaf label width mismatch: " + label_text(n->label));
      const bool removed = core.logically_removed(n->info.load());
      if (n->label == low.label()) {
        low_sentinel = true;
        if (removed) fail("low sentinel logically removed");
      } else if (n->label == high.label()) {
        high_sentinel = true;
        if (removed) fail("high sentinel logically removed");
      } else if (!removed) {
        report.keys.insert(n->label.value());
      }
    }
  }

  for (const auto& [key, count] : label_count)
    if (count > 1) fail("duplicate reachable label: " + key);
  for (const auto& [node, degree] : in_degree)
    if (degree != 1)
      fail("node " + label_text(node->label) + " has " + std::to_string(degree) +
           " reachable parents");
  if (in_degree.count(core.root()) != 0) fail("root is referenced by a child slot");
  if (!low_sentinel) fail("low sentinel unreachable");
  if (!high_sentinel) fail("high sentinel unreachable");

  report.reachable_nodes = visited.size();
  std::sort(report.reachable_ids.begin(), report.reachable_ids.end());
  if (!report.ok) report.dump = dump_tree(trie);
  return report;
}

std::vector<uint64_t> SnapshotTracker::observe(const std::vector<uint64_t>& reachable_ids) {
  std::vector<uint64_t> resurrected;
  std::unordered_set<uint64_t> current(reachable_ids.begin(), reachable_ids.end());
  if (!first_) {
    for (uint64_t id : previous_)
      if (current.count(id) == 0) departed_.insert(id);
    for (uint64_t id : current)
      if (departed_.count(id) != 0) resurrected.push_back(id);
  }
  first_ = false;
  previous_ = std::move(current);
  return resurrected;
}

}  // namespace patricia::harness
