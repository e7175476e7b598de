#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>

#include "pathforge/text.hpp"
#include "pathforge/validation.hpp"
#include "support.hpp"

using namespace pathforge;
using namespace pathforge::testing;

namespace {

std::vector<ViolationCode> codes(const std::vector<ValidationError>& errors) {
  std::vector<ViolationCode> out;
  for (const auto& e : errors) out.push_back(e.code);
  return out;
}

bool has_code(const std::vector<ValidationError>& errors, ViolationCode c) {
  return std::any_of(errors.begin(), errors.end(), [&](const auto& e) { return e.code == c; });
}

std::vector<ValidationError> check(const PathwayDraft& d) { return validate_structure(d.nodes, d.edges, d.root); }

}  // namespace

TEST(Pathway, MinimalIsValid) {
  BuildResult r = build_pathway(minimal_draft());
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r.violations.empty());
  EXPECT_EQ(r.pathway->nodes().size(), 3u);
  EXPECT_EQ(r.pathway->question_count(), 1u);
  EXPECT_EQ(r.pathway->root(), NodeId("Q1"));
}

TEST(Pathway, Successors) {
  Pathway p = build_pathway_or_throw(minimal_draft());
  auto q1 = successors(p, NodeId("Q1"));
  ASSERT_EQ(q1.size(), 2u);
  EXPECT_EQ(q1.at(Answer::Yes), NodeId("C1"));
  EXPECT_EQ(q1.at(Answer::No), NodeId("C2"));
  EXPECT_TRUE(successors(p, NodeId("C1")).empty());
  EXPECT_THROW(successors(p, NodeId("nope")), Error);
}

TEST(Pathway, SuccessorsInFiveNodeChain) {
  // Q1 -yes-> Q2 -yes-> C1; Q1 -no-> D; Q2 -no-> C2
  Pathway p = build_pathway_or_throw(make_draft("chain5", "Q1",
                                                {{"Q1", NodeKind::Question, "First?"},
                                                 {"Q2", NodeKind::Question, "Second?"},
                                                 {"C1", NodeKind::Conclusion, "Both hold."},
                                                 {"C2", NodeKind::Conclusion, "Only the first holds."},
                                                 {"D", NodeKind::Conclusion, "The rule does not apply.", true}},
                                                {{"Q1", Answer::Yes, "Q2"},
                                                 {"Q1", Answer::No, "D"},
                                                 {"Q2", Answer::Yes, "C1"},
                                                 {"Q2", Answer::No, "C2"}}));
  auto s = successors(p, NodeId("Q2"));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.at(Answer::Yes), NodeId("C1"));
  EXPECT_EQ(s.at(Answer::No), NodeId("C2"));
}

TEST(Pathway, TopologicalOrderOfMinimal) {
  Pathway p = build_pathway_or_throw(minimal_draft());
  EXPECT_EQ(topological_order(p), (std::vector<NodeId>{NodeId("Q1"), NodeId("C1"), NodeId("C2")}));
}

TEST(Pathway, TopologicalOrderOfDiamondPointsEdgesForward) {
  Pathway p = build_pathway_or_throw(make_draft("diamond", "Q1",
                                                {{"Q1", NodeKind::Question, "Top?"},
                                                 {"Q2", NodeKind::Question, "Left?"},
                                                 {"Q3", NodeKind::Question, "Right?"},
                                                 {"C1", NodeKind::Conclusion, "Bottom."},
                                                 {"D", NodeKind::Conclusion, "The rule does not apply.", true}},
                                                {{"Q1", Answer::Yes, "Q2"},
                                                 {"Q1", Answer::No, "Q3"},
                                                 {"Q2", Answer::Yes, "C1"},
                                                 {"Q2", Answer::No, "D"},
                                                 {"Q3", Answer::Yes, "C1"},
                                                 {"Q3", Answer::No, "D"}}));
  auto order = topological_order(p);
  ASSERT_EQ(order.size(), 5u);
  auto pos = [&](const NodeId& id) { return std::find(order.begin(), order.end(), id) - order.begin(); };
  for (const auto& e : p.edges()) EXPECT_LT(pos(e.from), pos(e.to)) << describe(e);
}

TEST(Pathway, TopologicalOrderRejectsCycles) {
  PathwayDraft d = minimal_draft();
  d.edges.push_back(Edge{NodeId("C1"), NodeId("Q1"), Answer::Yes});
  try {
    topological_order(d.nodes, d.edges);
    FAIL() << "expected CycleDetected";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CycleDetected);
  }
}

TEST(Pathway, NodeIdsAreNormalizedToNfc) {
  // "é" written as e + combining acute in the node, precomposed in the edges.
  PathwayDraft d = make_draft("nfc", "Q\u00e9",
                              {{"Qe\u0301", NodeKind::Question, "Question?"},
                               {"C1", NodeKind::Conclusion, "Yes."},
                               {"C2", NodeKind::Conclusion, "No."}},
                              {{"Q\u00e9", Answer::Yes, "C1"}, {"Qe\u0301", Answer::No, "C2"}});
  BuildResult r = build_pathway(d);
  ASSERT_TRUE(r.ok()) << r.violations.size();
  EXPECT_EQ(r.pathway->root().value, "Q\u00e9");
}

TEST(Pathway, BuildOrThrowReportsStructurallyInvalid) {
  PathwayDraft d = minimal_draft();
  d.edges.pop_back();
  try {
    build_pathway_or_throw(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StructurallyInvalid);
  }
}

TEST(Pathway, RoundTripThroughDraftIsIdentical) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    Pathway p = build_pathway_or_throw(random_valid_draft(rng, 2, 12));
    Pathway q = build_pathway_or_throw(p.to_draft());
    EXPECT_TRUE(structurally_identical(p, q));
  }
}

TEST(Validation, SelfLoopIsCycle) {
  PathwayDraft d = minimal_draft();
  d.edges[0].to = NodeId("Q1");  // Q1 -yes-> Q1
  auto errors = check(d);
  ASSERT_TRUE(has_code(errors, ViolationCode::Cycle));
  EXPECT_FALSE(build_pathway(d).ok());
}

TEST(Validation, TwoRootsAreMultipleRoots) {
  PathwayDraft d = minimal_draft();
  d.nodes.push_back(Node{NodeId("Q2"), NodeKind::Question, "Another start?", false, {}});
  d.edges.push_back(Edge{NodeId("Q2"), NodeId("C1"), Answer::Yes});
  d.edges.push_back(Edge{NodeId("Q2"), NodeId("C2"), Answer::No});
  auto errors = check(d);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].code, ViolationCode::MultipleRoots);
  EXPECT_EQ(std::get<NodeId>(errors[0].location), NodeId("Q2"));
}

TEST(Validation, TwoCycleIsReportedAtTheBackEdge) {
  PathwayDraft d = make_draft("two-cycle", "Q1",
                              {{"Q1", NodeKind::Question, "First?"},
                               {"Q2", NodeKind::Question, "Second?"},
                               {"D", NodeKind::Conclusion, "The rule does not apply.", true}},
                              {{"Q1", Answer::Yes, "Q2"},
                               {"Q2", Answer::Yes, "Q1"},
                               {"Q1", Answer::No, "D"},
                               {"Q2", Answer::No, "D"}});
  auto errors = check(d);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].code, ViolationCode::Cycle);
  EXPECT_EQ(std::get<Edge>(errors[0].location), (Edge{NodeId("Q2"), NodeId("Q1"), Answer::Yes}));
}

TEST(Validation, MissingBranchAtQuestion) {
  PathwayDraft d = minimal_draft();
  d.edges.pop_back();           // drop Q1 -no-> C2
  d.nodes.pop_back();           // and the then-unreachable C2
  auto errors = check(d);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].code, ViolationCode::MissingBranch);
  EXPECT_EQ(std::get<NodeId>(errors[0].location), NodeId("Q1"));
}

TEST(Validation, IsolatedConclusionIsDisconnected) {
  PathwayDraft d = minimal_draft();
  d.nodes.push_back(Node{NodeId("C9"), NodeKind::Conclusion, "Unreachable.", false, {}});
  auto errors = check(d);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].code, ViolationCode::Disconnected);
  EXPECT_EQ(std::get<NodeId>(errors[0].location), NodeId("C9"));
}

TEST(Validation, EveryCodeHasAWitness) {
  PathwayDraft d = minimal_draft();

  PathwayDraft dup = d;
  dup.edges.push_back(dup.edges[0]);
  EXPECT_EQ(codes(check(dup)), std::vector{ViolationCode::DuplicateBranch});

  PathwayDraft two_yes = d;
  two_yes.edges.push_back(Edge{NodeId("Q1"), NodeId("C2"), Answer::Yes});
  EXPECT_EQ(codes(check(two_yes)), std::vector{ViolationCode::DuplicateBranch});

  PathwayDraft out_edge = d;
  out_edge.edges.push_back(Edge{NodeId("C1"), NodeId("C2"), Answer::Yes});
  EXPECT_EQ(codes(check(out_edge)), std::vector{ViolationCode::ConclusionWithOutEdges});

  PathwayDraft dangling = d;
  dangling.edges[1].to = NodeId("ghost");
  auto e = check(dangling);
  EXPECT_TRUE(has_code(e, ViolationCode::DanglingEdge));

  PathwayDraft bad_root = d;
  bad_root.root = NodeId("C1");
  EXPECT_TRUE(has_code(check(bad_root), ViolationCode::RootIsConclusion));

  PathwayDraft unknown_root = d;
  unknown_root.root = NodeId("nowhere");
  auto ur = check(unknown_root);
  ASSERT_TRUE(has_code(ur, ViolationCode::DanglingEdge));
  EXPECT_EQ(std::get<NodeId>(ur[0].location), NodeId("nowhere"));

  PathwayDraft single = d;
  single.nodes.resize(1);
  single.edges.clear();
  EXPECT_TRUE(has_code(check(single), ViolationCode::TooFewNodes));
  EXPECT_TRUE(has_code(check(PathwayDraft{}), ViolationCode::TooFewNodes));

  PathwayDraft blank = d;
  blank.nodes[1].text = " \t";
  EXPECT_EQ(codes(check(blank)), std::vector{ViolationCode::InvalidNode});

  PathwayDraft default_question = d;
  default_question.nodes[0].is_default = true;
  EXPECT_EQ(codes(check(default_question)), std::vector{ViolationCode::InvalidNode});
}

TEST(Validation, ValidDraftsProduceNoErrors) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    PathwayDraft d = random_valid_draft(rng, 2, 12);
    ASSERT_TRUE(check(d).empty()) << "draft " << i;
  }
}

TEST(Validation, SeededDefectsAreReported) {
  std::mt19937_64 rng(12);
  for (auto code : seeded_codes())
    for (int i = 0; i < 20; ++i) {
      PathwayDraft d = seed_defect(random_valid_draft(rng, 2, 10), code, rng);
      EXPECT_TRUE(has_code(check(d), code)) << to_string(code) << " case " << i;
    }
}

TEST(Validation, AgreesWithIndependentOracle) {
  std::mt19937_64 rng(13);
  auto codes_list = seeded_codes();
  for (int i = 0; i < 3000; ++i) {
    PathwayDraft d;
    switch (i % 3) {
      case 0: d = random_graph(rng, 8); break;
      case 1: d = random_valid_draft(rng, 2, 10); break;
      default: d = seed_defect(random_valid_draft(rng, 2, 10), codes_list[static_cast<std::size_t>(i) % codes_list.size()], rng);
    }
    const bool oracle = oracle_is_valid(d);
    ASSERT_EQ(check(d).empty(), oracle) << "case " << i;
    ASSERT_EQ(build_pathway(d).ok(), oracle) << "case " << i;
  }
}

TEST(Validation, IsTotalOnArbitraryGraphs) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 2000; ++i) {
    PathwayDraft d = random_graph(rng, 12);
    BuildResult r = build_pathway(d);
    EXPECT_EQ(r.ok(), r.violations.empty());
  }
}

TEST(Validation, PathLengthIsBoundedByNodeCount) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 100; ++i) {
    Pathway p = build_pathway_or_throw(random_valid_draft(rng, 2, 12));
    for (const auto& path : all_answer_paths(p)) EXPECT_LE(path.size(), p.nodes().size() - 1);
  }
}

// --- text, grounding, coverage ---------------------------------------------

TEST(Text, ContentTokensFoldCaseAndDropShortWords) {
  auto t = text::content_tokens("The Lessee, if LATE: pays a fee!");
  EXPECT_EQ(t, (std::set<std::string>{"the", "lessee", "late", "pays", "fee"}));
  EXPECT_EQ(text::content_tokens("À MOINS QUE"), (std::set<std::string>{"moins", "que"}));
  EXPECT_TRUE(text::content_tokens("a b, c; ...").empty());
}

TEST(Text, CodepointLength) {
  EXPECT_EQ(text::codepoint_length("délai"), 5u);
  EXPECT_EQ(text::codepoint_length(""), 0u);
}

TEST(Grounding, VerbatimSubstringScoresOne) {
  Article a = minimal_article();
  EXPECT_EQ(grounding_score("the lessor may apply for the resiliation", a.text), 1.0);
}

TEST(Grounding, DisjointVocabularyScoresZero) {
  EXPECT_EQ(grounding_score("Zebras graze quietly", minimal_article().text), 0.0);
}

TEST(Grounding, HandCountedFourOfFive) {
  // Node tokens {rent, payment, three, weeks, late}; the article lacks "three".
  Overlap o = grounding_overlap("Rent payment three weeks late?", "The rent payment is more than two weeks late.");
  EXPECT_EQ(o.matched, 4u);
  EXPECT_EQ(o.total, 5u);
  EXPECT_EQ(o.value(), 0.8);
}

TEST(Grounding, EmptyTextIsAnError) {
  try {
    grounding_score("  ", "article");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyText);
  }
  EXPECT_THROW(grounding_score("node", ""), Error);
}

namespace {

Article ten_token_article() {
  Article a;
  a.id = "cov";
  a.text = "Lessee pays rent monthly; lessor gives written notice before renewal.";
  return a;
}

Pathway coverage_pathway(const std::string& question, const std::string& conclusion) {
  return build_pathway_or_throw(make_draft("cov.auto", "Q", {{"Q", NodeKind::Question, question},
                                                             {"C", NodeKind::Conclusion, conclusion},
                                                             {"D", NodeKind::Conclusion, "No.", true}},
                                           {{"Q", Answer::Yes, "C"}, {"Q", Answer::No, "D"}}, Origin::Automatic,
                                           "cov"));
}

}  // namespace

TEST(Coverage, HandCountedSixOfTen) {
  Article a = ten_token_article();
  ASSERT_EQ(text::content_tokens(a.text).size(), 10u);
  Overlap o = coverage_overlap(coverage_pathway("Lessee pays rent monthly?", "Lessor gives."), a);
  EXPECT_EQ(o.matched, 6u);
  EXPECT_EQ(o.total, 10u);
  EXPECT_EQ(o.value(), 0.6);
}

TEST(Coverage, FullQuoteAndEmptyOverlap) {
  Article a = ten_token_article();
  EXPECT_EQ(article_coverage(coverage_pathway("Lessee pays rent monthly?", "Lessor gives written notice before renewal."), a),
            1.0);
  EXPECT_EQ(article_coverage(coverage_pathway("Zebra?", "Giraffe."), a), 0.0);
}

TEST(Grounding, InvariantUnderCaseAndPunctuation) {
  std::mt19937_64 rng(21);
  const std::string node = "Did the lessor give written notice three months before the end of the lease?";
  const std::string article = ten_token_article().text + " The lease ends after three months.";
  const Overlap base = grounding_overlap(node, article);
  const std::string punct = ".,;:!?()\"' -";
  for (int i = 0; i < 100; ++i) {
    std::string perturbed;
    for (char c : node) {
      if (std::isalpha(static_cast<unsigned char>(c)))
        perturbed += (rng() & 1) ? static_cast<char>(std::toupper(c)) : static_cast<char>(std::tolower(c));
      else if (c == ' ' || c == '?')
        perturbed += std::string(1, punct[rng() % punct.size()]) + " ";
      else
        perturbed += c;
    }
    Overlap o = grounding_overlap(perturbed, article);
    ASSERT_EQ(o.matched, base.matched) << perturbed;
    ASSERT_EQ(o.total, base.total) << perturbed;
  }
}

// --- lint -------------------------------------------------------------------

namespace {

std::vector<LintWarning> warnings_of(const std::vector<LintWarning>& all, LintCode c) {
  std::vector<LintWarning> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out), [&](const auto& w) { return w.code == c; });
  return out;
}

}  // namespace

TEST(Lint, MinimalPathwayHasNoDenialWarning) {
  Pathway p = build_pathway_or_throw(minimal_draft());
  auto w = lint(p, minimal_article());
  EXPECT_TRUE(warnings_of(w, LintCode::PossibleDenialOfAntecedent).empty());
}

TEST(Lint, NoEdgeIntoSubstantiveConclusion) {
  PathwayDraft d = minimal_draft();
  d.nodes[2].text = "The lease may be terminated.";
  d.nodes[2].is_default = false;
  Pathway p = build_pathway_or_throw(d);
  auto w = warnings_of(lint(p, minimal_article()), LintCode::PossibleDenialOfAntecedent);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(std::get<Edge>(w[0].location), (Edge{NodeId("Q1"), NodeId("C2"), Answer::No}));
}

TEST(Lint, CriterionInConclusion) {
  PathwayDraft d = minimal_draft();
  d.nodes[1].text = "The lessee is liable if notice was given";
  Pathway p = build_pathway_or_throw(d);
  auto w = warnings_of(lint(p, minimal_article()), LintCode::CriterionInConclusion);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(std::get<NodeId>(w[0].location), NodeId("C1"));

  // Markers match whole words only, in any configured language.
  d.nodes[1].text = "The lessor gets a gift.";
  EXPECT_TRUE(warnings_of(lint(build_pathway_or_throw(d), minimal_article()), LintCode::CriterionInConclusion).empty());
  d.nodes[1].text = "Le locataire peut résilier lorsqu'il reçoit un avis.";
  EXPECT_EQ(warnings_of(lint(build_pathway_or_throw(d), minimal_article()), LintCode::CriterionInConclusion).size(), 1u);
  d.nodes[1].text = "The lease ends, provided that notice is given.";
  EXPECT_EQ(warnings_of(lint(build_pathway_or_throw(d), minimal_article()), LintCode::CriterionInConclusion).size(), 1u);
}

TEST(Lint, UngroundedNodeCarriesScore) {
  PathwayDraft d = minimal_draft();
  d.nodes[1].text = "Zebras may apply.";  // {zebras, may, apply}: 2 of 3 in the article
  Pathway p = build_pathway_or_throw(d);
  LintConfig cfg;
  cfg.grounding_threshold = 0.7;
  auto w = warnings_of(lint(p, minimal_article(), cfg), LintCode::UngroundedNode);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(std::get<NodeId>(w[0].location), NodeId("C1"));
  EXPECT_DOUBLE_EQ(*w[0].score, 2.0 / 3.0);
}

TEST(Lint, LowCoverage) {
  Article a = ten_token_article();
  auto w = warnings_of(lint(coverage_pathway("Lessee pays?", "Rent."), a), LintCode::LowArticleCoverage);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<std::monostate>(w[0].location));
  EXPECT_DOUBLE_EQ(*w[0].score, 0.3);
}

TEST(Report, InvalidDraftSkipsLint) {
  PathwayDraft d = minimal_draft();
  d.edges.pop_back();
  Article a = minimal_article();
  ValidationReport r = make_report(d, &a);
  EXPECT_FALSE(r.is_valid());
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_FALSE(r.article_coverage.has_value());
}

TEST(Report, ValidDraftHasGroundingForEveryNode) {
  Article a = minimal_article();
  ValidationReport r = make_report(minimal_draft(), &a);
  EXPECT_TRUE(r.is_valid());
  EXPECT_EQ(r.grounding.size(), 3u);
  ASSERT_TRUE(r.article_coverage.has_value());
}
