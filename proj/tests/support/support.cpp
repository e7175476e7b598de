#include "support.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <tuple>

#include "pathforge/text.hpp"

#ifndef PATHFORGE_TEST_DATA
#error "PATHFORGE_TEST_DATA must point at tests/data"
#endif

namespace pathforge::testing {

std::filesystem::path data_dir() { return PATHFORGE_TEST_DATA; }

TempDir::TempDir() {
  std::random_device rd;
  auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("pathforge-test-" + std::to_string(rd()));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

PathwayDraft make_draft(std::string id, std::string root, const std::vector<NodeSpec>& nodes,
                        const std::vector<EdgeSpec>& edges, Origin origin, std::string article_id) {
  PathwayDraft d;
  d.id = std::move(id);
  d.article_id = std::move(article_id);
  d.origin = origin;
  d.root = NodeId(std::move(root));
  for (const auto& n : nodes) d.nodes.push_back(Node{NodeId(n.id), n.kind, n.text, n.is_default, std::nullopt});
  for (const auto& e : edges) d.edges.push_back(Edge{NodeId(e.from), NodeId(e.to), e.answer});
  return d;
}

PathwayDraft minimal_draft() {
  return make_draft("art-min.manual", "Q1",
                    {{"Q1", NodeKind::Question, "Is the rent more than three weeks late?"},
                     {"C1", NodeKind::Conclusion, "The lessor may apply for resiliation of the lease."},
                     {"C2", NodeKind::Conclusion, "The rule does not apply.", true}},
                    {{"Q1", Answer::Yes, "C1"}, {"Q1", Answer::No, "C2"}});
}

Article minimal_article() {
  Article a;
  a.id = "art-min";
  a.source = "Residential lease act, s. 1";
  a.text = "If the rent is more than three weeks late, the lessor may apply for the resiliation of the lease.";
  a.difficulty = Difficulty::Easy;
  return a;
}

PathwayDraft chain_draft() {
  return make_draft("art-min.chain", "Q1",
                    {{"Q1", NodeKind::Question, "Is the person a lessee?"},
                     {"Q2", NodeKind::Question, "Is the rent late?"},
                     {"Q3", NodeKind::Question, "Is the rent more than three weeks late?"},
                     {"C_deep", NodeKind::Conclusion, "The lessor may apply for resiliation of the lease."},
                     {"D", NodeKind::Conclusion, "The rule does not apply.", true}},
                    {{"Q1", Answer::Yes, "Q2"},
                     {"Q1", Answer::No, "D"},
                     {"Q2", Answer::Yes, "Q3"},
                     {"Q2", Answer::No, "D"},
                     {"Q3", Answer::Yes, "C_deep"},
                     {"Q3", Answer::No, "D"}});
}

namespace {

const std::vector<std::string> kWords = {"lessee", "lessor", "rent",   "dwelling", "notice",  "tribunal",
                                         "repair", "lease",  "month",  "payment",  "deposit", "sublease",
                                         "renewal", "damage", "written", "urgent", "period",  "tenant"};

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string random_words(std::mt19937_64& rng, int lo, int hi) {
  std::string s;
  for (int i = 0, n = uniform(rng, lo, hi); i < n; ++i) s += (i ? " " : "") + pick(kWords, rng);
  return s;
}

std::string fresh_id(std::mt19937_64& rng, const std::set<std::string>& used) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  for (;;) {
    std::string id = "x";
    for (int i = 0; i < 6; ++i) id += alphabet[static_cast<std::size_t>(uniform(rng, 0, 35))];
    if (!used.contains(id)) return id;
  }
}

std::set<std::string> ids_of(const PathwayDraft& d) {
  std::set<std::string> s;
  for (const auto& n : d.nodes) s.insert(n.id.value);
  return s;
}

std::vector<NodeId> of_kind(const PathwayDraft& d, NodeKind k) {
  std::vector<NodeId> out;
  for (const auto& n : d.nodes)
    if (n.kind == k) out.push_back(n.id);
  return out;
}

}  // namespace

PathwayDraft random_valid_draft(std::mt19937_64& rng, int min_nodes, int max_nodes) {
  const int n = uniform(rng, std::max(2, min_nodes), max_nodes);
  const int k = uniform(rng, n / 2, n - 1);  // questions; leaves c = n - k <= k + 1
  std::set<std::string> used;
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    ids.push_back(fresh_id(rng, used));
    used.insert(ids.back());
  }
  PathwayDraft d;
  d.id = "random.auto";
  d.article_id = "random";
  d.origin = Origin::Automatic;
  d.root = NodeId(ids[0]);
  const bool with_default = uniform(rng, 0, 1) == 1;
  for (int i = 0; i < n; ++i) {
    Node node;
    node.id = NodeId(ids[static_cast<std::size_t>(i)]);
    if (i < k) {
      node.kind = NodeKind::Question;
      node.text = "Is the " + random_words(rng, 2, 5) + " given?";
    } else {
      node.kind = NodeKind::Conclusion;
      node.is_default = with_default && i == n - 1;
      node.text = node.is_default ? "The rule does not apply." : "The " + random_words(rng, 2, 5) + " applies.";
    }
    d.nodes.push_back(std::move(node));
  }
  // slot[i][a] = target index or -1
  std::vector<std::array<int, 2>> slot(static_cast<std::size_t>(k), {-1, -1});
  for (int j = 1; j < n; ++j) {
    std::vector<std::pair<int, int>> free;
    for (int p = 0; p < std::min(j, k); ++p)
      for (int a = 0; a < 2; ++a)
        if (slot[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)] < 0) free.emplace_back(p, a);
    auto [p, a] = pick(free, rng);
    slot[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)] = j;
  }
  for (int p = 0; p < k; ++p)
    for (int a = 0; a < 2; ++a) {
      int& t = slot[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)];
      if (t < 0) t = uniform(rng, p + 1, n - 1);
      d.edges.push_back(Edge{NodeId(ids[static_cast<std::size_t>(p)]), NodeId(ids[static_cast<std::size_t>(t)]),
                             a == 0 ? Answer::Yes : Answer::No});
    }
  std::shuffle(d.nodes.begin(), d.nodes.end(), rng);
  std::shuffle(d.edges.begin(), d.edges.end(), rng);
  return d;
}

std::vector<ViolationCode> seeded_codes() {
  return {ViolationCode::Cycle,           ViolationCode::MultipleRoots,          ViolationCode::Disconnected,
          ViolationCode::MissingBranch,   ViolationCode::DuplicateBranch,        ViolationCode::ConclusionWithOutEdges,
          ViolationCode::DanglingEdge,    ViolationCode::RootIsConclusion,       ViolationCode::TooFewNodes};
}

PathwayDraft seed_defect(const PathwayDraft& valid, ViolationCode code, std::mt19937_64& rng) {
  PathwayDraft d = valid;
  auto used = ids_of(d);
  auto questions = of_kind(d, NodeKind::Question);
  auto conclusions = of_kind(d, NodeKind::Conclusion);
  std::vector<NodeId> all;
  for (const auto& n : d.nodes) all.push_back(n.id);
  auto edge_index = [&] { return std::uniform_int_distribution<std::size_t>(0, d.edges.size() - 1)(rng); };

  switch (code) {
    case ViolationCode::Cycle: {
      Edge& e = d.edges[edge_index()];
      // Nodes that can reach e.from, e.from included.
      std::set<NodeId> ancestors{e.from};
      for (bool grew = true; grew;) {
        grew = false;
        for (const auto& x : d.edges)
          if (ancestors.contains(x.to) && ancestors.insert(x.from).second) grew = true;
      }
      e.to = pick(std::vector<NodeId>(ancestors.begin(), ancestors.end()), rng);
      break;
    }
    case ViolationCode::MultipleRoots: {
      NodeId extra(fresh_id(rng, used));
      d.nodes.push_back(Node{extra, NodeKind::Question, "Is the " + random_words(rng, 2, 4) + " given?", false, {}});
      d.edges.push_back(Edge{extra, pick(all, rng), Answer::Yes});
      d.edges.push_back(Edge{extra, pick(all, rng), Answer::No});
      break;
    }
    case ViolationCode::Disconnected:
      d.nodes.push_back(Node{NodeId(fresh_id(rng, used)), NodeKind::Conclusion, "An isolated conclusion.", false, {}});
      break;
    case ViolationCode::MissingBranch:
      d.edges.erase(d.edges.begin() + static_cast<std::ptrdiff_t>(edge_index()));
      break;
    case ViolationCode::DuplicateBranch: {
      const Edge e = d.edges[edge_index()];
      std::vector<NodeId> others;
      for (const auto& id : all)
        if (id != e.to) others.push_back(id);
      d.edges.push_back(Edge{e.from, pick(others, rng), e.answer});
      break;
    }
    case ViolationCode::ConclusionWithOutEdges:
      d.edges.push_back(Edge{pick(conclusions, rng), pick(all, rng), uniform(rng, 0, 1) ? Answer::Yes : Answer::No});
      break;
    case ViolationCode::DanglingEdge: {
      Edge& e = d.edges[edge_index()];
      NodeId ghost(fresh_id(rng, used));
      if (uniform(rng, 0, 1))
        e.to = ghost;
      else
        e.from = ghost;
      break;
    }
    case ViolationCode::RootIsConclusion:
      d.root = pick(conclusions, rng);
      break;
    case ViolationCode::TooFewNodes: {
      Node keep = pick(d.nodes, rng);
      d.nodes = {keep};
      d.edges.clear();
      if (uniform(rng, 0, 1)) d.nodes.clear();
      d.root = keep.id;
      break;
    }
    case ViolationCode::InvalidNode:
      d.nodes[0].text = "   ";
      break;
  }
  std::shuffle(d.edges.begin(), d.edges.end(), rng);
  return d;
}

PathwayDraft random_graph(std::mt19937_64& rng, int max_nodes) {
  PathwayDraft d;
  d.id = "graph";
  d.article_id = "graph";
  std::set<std::string> used;
  const int n = uniform(rng, 0, max_nodes);
  std::vector<NodeId> ids;
  for (int i = 0; i < n; ++i) {
    std::string id = fresh_id(rng, used);
    if (uniform(rng, 0, 30) == 0 && !ids.empty()) id = ids.front().value;  // duplicate id
    used.insert(id);
    ids.emplace_back(id);
    const bool question = uniform(rng, 0, 1) == 1;
    std::string text = uniform(rng, 0, 40) == 0 ? "" : random_words(rng, 1, 4);
    d.nodes.push_back(Node{ids.back(), question ? NodeKind::Question : NodeKind::Conclusion, text,
                           !question && uniform(rng, 0, 3) == 0, std::nullopt});
  }
  auto any = [&] { return ids.empty() || uniform(rng, 0, 25) == 0 ? NodeId("ghost") : pick(ids, rng); };
  for (int i = 0, m = uniform(rng, 0, 2 * n + 2); i < m; ++i)
    d.edges.push_back(Edge{any(), any(), uniform(rng, 0, 1) ? Answer::Yes : Answer::No});
  d.root = any();
  return d;
}

bool oracle_is_valid(const PathwayDraft& d) {
  std::map<std::string, const Node*> nodes;
  for (const auto& n : d.nodes) {
    if (n.id.value.empty() || nodes.contains(n.id.value)) return false;
    if (text::trim(n.text).empty()) return false;
    if (n.kind == NodeKind::Question && n.is_default) return false;
    if (n.citation_span && n.citation_span->start >= n.citation_span->end) return false;
    nodes[n.id.value] = &n;
  }
  if (nodes.size() < 2) return false;
  auto root = nodes.find(d.root.value);
  if (root == nodes.end() || root->second->kind != NodeKind::Question) return false;
  for (const auto& e : d.edges)
    if (!nodes.contains(e.from.value) || !nodes.contains(e.to.value)) return false;
  for (const auto& [id, n] : nodes) {
    int yes = 0, no = 0;
    for (const auto& e : d.edges)
      if (e.from.value == id) ++(e.answer == Answer::Yes ? yes : no);
    if (n->kind == NodeKind::Question && (yes != 1 || no != 1)) return false;
    if (n->kind == NodeKind::Conclusion && yes + no != 0) return false;
  }
  // Peel nodes without remaining out-edges; a cycle leaves something behind.
  std::set<std::string> alive;
  for (const auto& [id, _] : nodes) alive.insert(id);
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = alive.begin(); it != alive.end();) {
      bool has_out = std::any_of(d.edges.begin(), d.edges.end(), [&](const Edge& e) {
        return e.from.value == *it && alive.contains(e.to.value);
      });
      if (!has_out) {
        it = alive.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  if (!alive.empty()) return false;
  std::set<std::string> reach{d.root.value};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& e : d.edges)
      if (reach.contains(e.from.value) && reach.insert(e.to.value).second) grew = true;
  }
  return reach.size() == nodes.size();
}

PathwayDraft rename_ids(const PathwayDraft& d, std::mt19937_64& rng, const std::string& prefix) {
  std::vector<std::string> fresh;
  for (std::size_t i = 0; i < d.nodes.size(); ++i) fresh.push_back(prefix + std::to_string(i));
  std::shuffle(fresh.begin(), fresh.end(), rng);
  std::map<NodeId, NodeId> rename;
  for (std::size_t i = 0; i < d.nodes.size(); ++i) rename[d.nodes[i].id] = NodeId(fresh[i]);
  PathwayDraft out = d;
  for (auto& n : out.nodes) n.id = rename.at(n.id);
  for (auto& e : out.edges) {
    e.from = rename.at(e.from);
    e.to = rename.at(e.to);
  }
  out.root = rename.at(d.root);
  std::shuffle(out.nodes.begin(), out.nodes.end(), rng);
  std::shuffle(out.edges.begin(), out.edges.end(), rng);
  return out;
}

PathwayDraft swap_labels(const PathwayDraft& d, std::mt19937_64& rng) {
  PathwayDraft out = d;
  auto questions = of_kind(d, NodeKind::Question);
  const NodeId q = pick(questions, rng);
  for (auto& e : out.edges)
    if (e.from == q) e.answer = e.answer == Answer::Yes ? Answer::No : Answer::Yes;
  return out;
}

namespace {

double oracle_dice(const std::string& a, const std::string& b) {
  auto ta = text::content_tokens(a);
  auto tb = text::content_tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::vector<std::string> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) / static_cast<double>(ta.size() + tb.size());
}

using EdgeKey = std::tuple<std::string, int, std::string>;

std::set<EdgeKey> edge_keys(const Pathway& p) {
  std::set<EdgeKey> s;
  for (const auto& e : p.edges()) s.emplace(e.from.value, static_cast<int>(e.answer), e.to.value);
  return s;
}

}  // namespace

bool witness_is_valid(const Pathway& a, const Pathway& b, const std::map<NodeId, NodeId>& w, double threshold) {
  if (w.size() != a.nodes().size() || a.nodes().size() != b.nodes().size()) return false;
  std::set<NodeId> image;
  for (const auto& [x, y] : w) {
    const Node* nx = a.find(x);
    const Node* ny = b.find(y);
    if (!nx || !ny || !image.insert(y).second) return false;
    if (nx->kind != ny->kind || oracle_dice(nx->text, ny->text) < threshold) return false;
  }
  if (w.at(a.root()) != b.root()) return false;
  std::set<EdgeKey> mapped;
  for (const auto& e : a.edges()) mapped.emplace(w.at(e.from).value, static_cast<int>(e.answer), w.at(e.to).value);
  return mapped == edge_keys(b);
}

bool brute_force_match(const Pathway& a, const Pathway& b, double threshold) {
  const auto an = a.nodes();
  const auto bn = b.nodes();
  if (an.size() != bn.size()) return false;
  const auto target = edge_keys(b);
  std::vector<std::size_t> perm(bn.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::map<std::string, std::string> w;
    bool ok = true;
    for (std::size_t i = 0; i < an.size() && ok; ++i) {
      const Node& x = an[i];
      const Node& y = bn[perm[i]];
      ok = x.kind == y.kind && (x.id == a.root()) == (y.id == b.root()) && oracle_dice(x.text, y.text) >= threshold;
      w[x.id.value] = y.id.value;
    }
    if (!ok) continue;
    std::set<EdgeKey> mapped;
    for (const auto& e : a.edges()) mapped.emplace(w[e.from.value], static_cast<int>(e.answer), w[e.to.value]);
    if (mapped == target) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

std::vector<std::vector<Answer>> all_answer_paths(const Pathway& p) {
  std::vector<std::vector<Answer>> out;
  std::vector<Answer> path;
  auto walk = [&](auto&& self, const NodeId& at) -> void {
    auto next = successors(p, at);
    if (next.empty()) {
      out.push_back(path);
      return;
    }
    for (auto a : {Answer::Yes, Answer::No}) {
      path.push_back(a);
      self(self, next.at(a));
      path.pop_back();
    }
  };
  walk(walk, p.root());
  return out;
}

std::string random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  std::string s(std::uniform_int_distribution<std::size_t>(0, max_len)(rng), '\0');
  for (auto& c : s) c = static_cast<char>(uniform(rng, 0, 255));
  return s;
}

std::string mutate(const std::string& seed, std::mt19937_64& rng) {
  static const std::vector<std::string> kTokens = {
      "{", "}", "[", "]", "\"", ":", ",", "null", "true", "1e999", "-0", "\"\\u0000\"", "\"\\ud800\"",
      "\xff", "\xc3", "```", "```json\n", "{\"blocks\":", "\"root\":", "\"type\":\"question\"",
      "[[[[[[[[[[[[", "}}}}}}}}", "\"schema_version\":\"pathforge/1\"", "\"answer\":\"maybe\""};
  std::string s = seed;
  for (int i = 0, ops = uniform(rng, 1, 4); i < ops; ++i) {
    const std::size_t pos = s.empty() ? 0 : std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng);
    switch (uniform(rng, 0, 6)) {
      case 0:
        if (!s.empty()) s[pos] = static_cast<char>(uniform(rng, 0, 255));
        break;
      case 1:
        s.erase(pos, static_cast<std::size_t>(uniform(rng, 1, 16)));
        break;
      case 2:
        s.insert(pos, random_bytes(rng, 8));
        break;
      case 3:
        s.insert(pos, pick(kTokens, rng));
        break;
      case 4:
        s.resize(pos);
        break;
      case 5:
        if (!s.empty()) s.insert(pos, s.substr(pos, static_cast<std::size_t>(uniform(rng, 1, 64))));
        break;
      default: {
        const std::string structural = "{}[]\":,";
        auto at = s.find_first_of(structural, pos);
        if (at != std::string::npos) s[at] = structural[static_cast<std::size_t>(uniform(rng, 0, 6))];
        break;
      }
    }
  }
  return s;
}

}  // namespace pathforge::testing
