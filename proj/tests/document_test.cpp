#include "relrag/document.hpp"

#include <numeric>
#include <random>

#include <gtest/gtest.h>

namespace relrag {
namespace {

void expect_probability_vector(const std::vector<double>& w) {
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_GE(w[i], 0.0);
    if (i > 0) {
      EXPECT_LE(w[i], w[i - 1]);
    }
    sum += w[i];
  }
  EXPECT_NEAR(sum, 1.0, kWeightSumTolerance);
}

TEST(MakeWeightsTest, ExponentialThreeDocuments) {
  // (1, 0.9, 0.81) / 2.71
  const auto w = make_weights(Exponential{0.9}, 3);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_NEAR(w[0], 0.36900369003690037, 1e-15);
  EXPECT_NEAR(w[1], 0.33210332103321033, 1e-15);
  EXPECT_NEAR(w[2], 0.29889298892988930, 1e-15);
}

TEST(MakeWeightsTest, Uniform) {
  EXPECT_EQ(make_weights(Uniform{}, 4), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
}

TEST(MakeWeightsTest, LinearGivesLastDocumentZero) {
  EXPECT_EQ(make_weights(Linear{}, 2), (std::vector<double>{1.0, 0.0}));
  const auto w = make_weights(Linear{}, 5);  // (4,3,2,1,0)/10
  EXPECT_DOUBLE_EQ(w[0], 0.4);
  EXPECT_DOUBLE_EQ(w[3], 0.1);
  EXPECT_EQ(w[4], 0.0);
}

TEST(MakeWeightsTest, LinearSingleDocumentHasNoMass) {
  try {
    make_weights(Linear{}, 1);
    FAIL() << "expected InvalidWeights";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidWeights);
  }
}

TEST(MakeWeightsTest, ExplicitScoresNormalize) {
  const auto w = make_weights(Explicit{{3.0, 1.0, 0.0}}, 3);
  EXPECT_EQ(w, (std::vector<double>{0.75, 0.25, 0.0}));
}

TEST(MakeWeightsTest, ExplicitErrors) {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code_of([] { make_weights(Explicit{{0.0, 0.0}}, 2); }), ErrorCode::InvalidWeights);
  EXPECT_EQ(code_of([] { make_weights(Explicit{{1.0, 2.0}}, 2); }), ErrorCode::InvalidWeights);
  EXPECT_EQ(code_of([] { make_weights(Explicit{{1.0}}, 2); }), ErrorCode::InvalidWeights);
  EXPECT_EQ(code_of([] { make_weights(Exponential{1.0}, 2); }), ErrorCode::InvalidWeights);
  EXPECT_THROW(make_weights(Uniform{}, 0), Error);
}

TEST(MakeWeightsTest, RandomSchemesYieldProbabilityVectors) {
  std::mt19937_64 gen(20261015);
  std::uniform_int_distribution<int> kdist(1, 10000);
  std::uniform_real_distribution<double> gdist(0.01, 0.999);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = rep < 20 ? rep + 2 : kdist(gen);
    switch (rep % 4) {
      case 0: expect_probability_vector(make_weights(Exponential{gdist(gen)}, k)); break;
      case 1: expect_probability_vector(make_weights(Linear{}, k)); break;
      case 2: expect_probability_vector(make_weights(Uniform{}, k)); break;
      default: {
        std::vector<double> scores(static_cast<std::size_t>(k));
        for (auto& s : scores) s = gdist(gen) * 10;
        std::sort(scores.rbegin(), scores.rend());
        expect_probability_vector(make_weights(Explicit{scores}, k));
      }
    }
  }
}

RetrievalSet five_docs() {
  return make_retrieval_set({Role::BenignRelevant, Role::BenignRelevant, Role::Irrelevant, Role::Malicious,
                             Role::Irrelevant},
                            Exponential{0.9});
}

TEST(RetrievalSetTest, CountsMalicious) {
  const auto set = five_docs();
  EXPECT_EQ(set.k(), 5);
  EXPECT_EQ(set.k_prime(), 1);
  EXPECT_NO_THROW(RetrievalSet::fresh(set.documents()));
}

TEST(RetrievalSetTest, FreshRejectsGapsAndIncreasingWeights) {
  EXPECT_THROW(RetrievalSet::fresh({{1, 0.5, Role::BenignRelevant, {}}, {3, 0.5, Role::BenignRelevant, {}}}),
               Error);
  EXPECT_THROW(RetrievalSet::fresh({{1, 0.4, Role::BenignRelevant, {}}, {2, 0.6, Role::BenignRelevant, {}}}),
               Error);
  EXPECT_THROW(RetrievalSet::fresh({{1, 0.4, Role::BenignRelevant, {}}, {2, 0.4, Role::BenignRelevant, {}}}),
               Error);
  EXPECT_THROW(RetrievalSet({{2, 0.5, Role::BenignRelevant, {}}, {1, 0.5, Role::BenignRelevant, {}}}), Error);
}

TEST(RelevanceFilterTest, DropsMarkedDocumentsKeepingIndices) {
  const auto set = five_docs();
  const auto kept = relevance_filter(set, {Verdict::Keep, Verdict::Keep, Verdict::Drop, Verdict::Keep,
                                           Verdict::Drop});
  ASSERT_EQ(kept.k(), 3);
  EXPECT_EQ(kept[0], set[0]);
  EXPECT_EQ(kept[1], set[1]);
  EXPECT_EQ(kept[2], set[3]);
  EXPECT_LT(kept.total_weight(), 1.0);  // not renormalized
}

TEST(RelevanceFilterTest, AllKeepIsIdentity) {
  const auto set = five_docs();
  EXPECT_EQ(relevance_filter(set, std::vector<Verdict>(5, Verdict::Keep)), set);
}

TEST(RelevanceFilterTest, AllDropIsEmptyAfterFilter) {
  try {
    relevance_filter(five_docs(), std::vector<Verdict>(5, Verdict::Drop));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyAfterFilter);
  }
}

TEST(RelevanceFilterTest, VerdictCountMustMatch) {
  EXPECT_THROW(relevance_filter(five_docs(), {Verdict::Keep}), Error);
}

TEST(RelevanceFilterTest, SimulatedFilterIsIdempotent) {
  std::mt19937 gen(7);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<Role> roles(1 + gen() % 20);
    for (auto& r : roles) r = static_cast<Role>(gen() % 3);
    roles[gen() % roles.size()] = Role::BenignRelevant;
    const auto set = make_retrieval_set(roles, Exponential{0.8});
    const auto once = relevance_filter(set, simulated_verdicts(set));
    const auto twice = relevance_filter(once, simulated_verdicts(once));
    EXPECT_EQ(once, twice);
    for (const auto& d : once) {
      EXPECT_NE(d.role, Role::Irrelevant);
      EXPECT_EQ(d, set[static_cast<std::size_t>(d.index - 1)]);
    }
  }
}

TEST(RenormalizeTest, RescalesSurvivors) {
  const auto set = five_docs();
  const auto kept = renormalized(relevance_filter(set, simulated_verdicts(set)));
  EXPECT_NEAR(kept.total_weight(), 1.0, 1e-12);
  EXPECT_NEAR(kept[0].weight / kept[1].weight, 1 / 0.9, 1e-12);
}

}  // namespace
}  // namespace relrag
