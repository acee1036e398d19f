#include "patricia/history.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace patricia::harness {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kInsert: return "insert";
    case OpKind::kErase: return "delete";
    case OpKind::kReplace: return "replace";
    case OpKind::kFind: return "find";
  }
  return "?";
}

namespace {

OpKind op_from_name(std::string_view s) {
  if (s == "insert") return OpKind::kInsert;
  if (s == "delete") return OpKind::kErase;
  if (s == "replace") return OpKind::kReplace;
  if (s == "find") return OpKind::kFind;
  throw std::invalid_argument("unknown op name: " + std::string(s));
}

}  // namespace

std::string serialize(const History& h) {
  std::ostringstream out;
  for (const HistoryEvent& e : h.events) {
    out << e.ts << ' ' << e.thread << ' ' << op_name(e.op) << ' ' << e.arg0;
    if (e.op == OpKind::kReplace) out << ' ' << e.arg1;
    out << ' ' << (e.is_invoke ? "invoke" : "respond");
    if (!e.is_invoke) out << ' ' << (e.result ? "true" : "false");
    out << '\n';
  }
  return out.str();
}

History parse_history(std::string_view text) {
  History h;
  std::istringstream in{std::string(text)};
  std::string line;
  uint32_t max_thread = 0;
  bool any = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    HistoryEvent e;
    std::string op, phase;
    ls >> e.ts >> e.thread >> op >> e.arg0;
    e.op = op_from_name(op);
    if (e.op == OpKind::kReplace) ls >> e.arg1;
    ls >> phase;
    if (phase == "invoke") {
      e.is_invoke = true;
    } else if (phase == "respond") {
      e.is_invoke = false;
      std::string res;
      ls >> res;
      e.result = (res == "true");
    } else {
      throw std::invalid_argument("bad phase in history line: " + line);
    }
    if (ls.fail()) throw std::invalid_argument("bad history line: " + line);
    max_thread = std::max(max_thread, e.thread);
    any = true;
    h.events.push_back(e);
  }
  h.thread_count = any ? max_thread + 1 : 0;
  std::stable_sort(h.events.begin(), h.events.end(),
                   [](const HistoryEvent& a, const HistoryEvent& b) { return a.ts < b.ts; });
  return h;
}

}  // namespace patricia::harness
