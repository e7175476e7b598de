#pragma once

// Shared fixtures, random generators and independent oracles for the unit and
// acceptance tests. The oracles here deliberately do not call into the code
// they check (validation, matching), apart from the tokenizer.

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pathforge/pathway.hpp"

namespace pathforge::testing {

std::filesystem::path data_dir();

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct NodeSpec {
  std::string id;
  NodeKind kind;
  std::string text;
  bool is_default = false;
};

struct EdgeSpec {
  std::string from;
  Answer answer;
  std::string to;
};

PathwayDraft make_draft(std::string id, std::string root, const std::vector<NodeSpec>& nodes,
                        const std::vector<EdgeSpec>& edges, Origin origin = Origin::Manual,
                        std::string article_id = "art-min");

// Q1 -yes-> C1, Q1 -no-> C2 (default).
PathwayDraft minimal_draft();
Article minimal_article();

// Q1 -> Q2 -> Q3 -> C_deep on yes, every no to the default conclusion.
PathwayDraft chain_draft();

// Random structurally valid pathway with node count in [min_nodes, max_nodes]
// (min_nodes >= 2). Ids are shuffled random strings, node and edge order is
// random. Texts are drawn from a small legal vocabulary.
PathwayDraft random_valid_draft(std::mt19937_64& rng, int min_nodes, int max_nodes);

// The nine structural defect kinds, excluding node-level InvalidNode.
std::vector<ViolationCode> seeded_codes();

// Corrupts a valid draft so that `code` must be reported.
PathwayDraft seed_defect(const PathwayDraft& valid, ViolationCode code, std::mt19937_64& rng);

// Arbitrary graph: random node kinds, random edges (possibly dangling or
// repeated), random root.
PathwayDraft random_graph(std::mt19937_64& rng, int max_nodes);

// Independent validity check written from the invariants: unique non-empty
// ids, >= 2 nodes, root is a known question, each question has exactly one
// yes and one no edge, conclusions have none, edges reference known nodes,
// acyclic (repeated leaf peeling), every node reachable from the root.
bool oracle_is_valid(const PathwayDraft& d);

// Copy with every node id renamed through a random bijection and node/edge
// order shuffled.
PathwayDraft rename_ids(const PathwayDraft& d, std::mt19937_64& rng, const std::string& prefix);

// Swaps the yes/no labels of the edges leaving one question.
PathwayDraft swap_labels(const PathwayDraft& d, std::mt19937_64& rng);

// Brute force over all n! bijections of node lists.
bool brute_force_match(const Pathway& a, const Pathway& b, double threshold);

// Checks a proposed witness against the definition.
bool witness_is_valid(const Pathway& a, const Pathway& b, const std::map<NodeId, NodeId>& witness, double threshold);

// Every answer sequence through the pathway, in yes-before-no order.
std::vector<std::vector<Answer>> all_answer_paths(const Pathway& p);

// Byte strings for fuzzing: random bytes, or mutations of `seed`.
std::string random_bytes(std::mt19937_64& rng, std::size_t max_len);
std::string mutate(const std::string& seed, std::mt19937_64& rng);

}  // namespace pathforge::testing
