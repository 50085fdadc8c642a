#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "cmkt/auctions.hpp"
#include "generators.hpp"

using namespace cmkt;

namespace {

BidVector bv(std::vector<double> xs) { return BidVector::from_values(xs); }

// Direct sort of all marginal bids: the m highest win, price = (m+1)-th.
double sorted_price(const std::vector<BidVector>& bids, std::int64_t m) {
  std::vector<double> all;
  for (const auto& b : bids)
    for (double x : b.expand()) all.push_back(x);
  std::sort(all.begin(), all.end(), std::greater<>());
  return static_cast<std::int64_t>(all.size()) > m ? all[static_cast<std::size_t>(m)] : 0.0;
}

}  // namespace

TEST(UniformPrice, ScriptedBidsClearAtZero) {
  const std::int64_t m = 10;
  const std::vector<BidVector> bids{BidVector::block(2.0, 1, m), BidVector::block(2.0, 1, m),
                                    BidVector::block(1.0, 8, m)};
  const auto o = uniform_price(bids, m);
  EXPECT_EQ(o.alloc.units, (std::vector<std::int64_t>{1, 1, 8}));
  EXPECT_EQ(*o.clearing_price, 0.0);
  EXPECT_EQ(o.revenue(), 0.0);
}

TEST(UniformPrice, SmallExamples) {
  const std::vector<BidVector> one{bv({5, 4, 3})};
  const auto s = uniform_price(one, 3);
  EXPECT_EQ(s.alloc[0], 3);
  EXPECT_EQ(s.payments[0], 0.0);

  const std::vector<BidVector> two{bv({3, 2}), bv({2.5, 1})};
  const auto o = uniform_price(two, 2);
  EXPECT_EQ(o.alloc.units, (std::vector<std::int64_t>{1, 1}));
  EXPECT_EQ(*o.clearing_price, 2.0);
  EXPECT_EQ(o.payments, (std::vector<double>{2.0, 2.0}));
}

TEST(UniformPrice, ReserveDropsLowBids) {
  const std::vector<BidVector> two{bv({3, 2}), bv({2.5, 1})};
  const auto o = uniform_price(two, 2, 2.6);
  EXPECT_EQ(o.alloc.units, (std::vector<std::int64_t>{1, 0}));
  EXPECT_EQ(o.payments[0], 2.6);
  EXPECT_THROW(uniform_price(two, 2, -1.0), std::invalid_argument);
}

TEST(UniformPrice, UnitCapIgnoresExtraBids) {
  const std::vector<BidVector> bids{bv({1, 1, 1, 1}), bv({0.5, 0.5, 0.5, 0.5})};
  const auto o = uniform_price(bids, 4, std::nullopt, TieBreak::kLowestIndexFirst, 2);
  EXPECT_EQ(o.alloc.units, (std::vector<std::int64_t>{2, 2}));
  EXPECT_EQ(*o.clearing_price, 0.0);
  EXPECT_EQ(cap_units(bv({3, 2, 1}), 1), bv({3, 0, 0}));
}

TEST(UniformPrice, MatchesSortOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const std::int64_t m = 1 + t % 8;
    const std::vector<BidVector> bids{testgen::random_bid(rng, m), testgen::random_bid(rng, m),
                                      testgen::random_bid(rng, m)};
    const auto o = uniform_price(bids, m);
    EXPECT_EQ(*o.clearing_price, sorted_price(bids, m));
    EXPECT_LE(o.alloc.total(), m);
    for (std::size_t i = 0; i < bids.size(); ++i) {
      EXPECT_EQ(o.payments[i], *o.clearing_price * static_cast<double>(o.alloc[i]));
      if (o.alloc[i] > 0) {
        EXPECT_GE(bids[i].at(o.alloc[i] - 1), *o.clearing_price);
      }
    }
  }
}

TEST(Discriminatory, PayAsBid) {
  const std::vector<BidVector> two{bv({3, 2}), bv({2.5, 1})};
  const auto o = discriminatory(two, 2);
  EXPECT_EQ(o.payments, (std::vector<double>{3.0, 2.5}));
  const std::vector<BidVector> single{bv({0.7})};
  EXPECT_EQ(discriminatory(single, 1).payments[0], 0.7);
  const std::vector<BidVector> zeros{bv({0, 0}), bv({0, 0})};
  const auto z = discriminatory(zeros, 2);
  EXPECT_EQ(z.alloc.total(), 2);
  EXPECT_EQ(z.revenue(), 0.0);
}

TEST(SingleItem, FirstPriceAndAllPay) {
  const std::vector<double> b{0.5, 0.3};
  const auto f = first_price_single(b);
  EXPECT_EQ(f.alloc.units, (std::vector<std::int64_t>{1, 0}));
  EXPECT_EQ(f.payments, (std::vector<double>{0.5, 0.0}));
  const std::vector<double> tie{0.4, 0.4};
  EXPECT_EQ(first_price_single(tie).alloc[0], 1);
  EXPECT_EQ(first_price_single(tie, TieBreak::kHighestIndexFirst).alloc[1], 1);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(first_price_single(zero).alloc[0], 1);
  EXPECT_EQ(first_price_single(zero).payments[0], 0.0);

  const auto a = all_pay_single(b);
  EXPECT_EQ(a.alloc[0], 1);
  EXPECT_EQ(a.payments, (std::vector<double>{0.5, 0.3}));
  EXPECT_EQ(all_pay_single(zero).revenue(), 0.0);
}

TEST(PostedPrice, Examples) {
  const std::vector<MarginalValuation> vals{MarginalValuation::from_values(std::vector<double>{0.4, 0.2}),
                                            MarginalValuation::from_values(std::vector<double>{0.3, 0.1})};
  const auto none = posted_price_sell(5.0, {}, vals, 2);
  EXPECT_EQ(none.alloc.total(), 0);
  EXPECT_EQ(none.revenue(), 0.0);
  const auto all = posted_price_sell(0.0, {}, vals, 2);
  EXPECT_EQ(all.alloc.units, (std::vector<std::int64_t>{2, 0}));
  const std::vector<int> order{1, 0};
  const auto rev = posted_price_sell(0.15, order, vals, 2);
  EXPECT_EQ(rev.alloc.units, (std::vector<std::int64_t>{1, 1}));
  EXPECT_NEAR(rev.revenue(), 0.3, 1e-15);
}

TEST(PostedPrice, BalancedPriceOnPostedFailsMarket) {
  const double price = 4.2;  // about half of E[max v]
  for (double v1 : {0.1, 0.9}) {
    for (double v2 : {0.0, 120.0, 3.0}) {
      const std::vector<MarginalValuation> vals{MarginalValuation::from_values(std::vector<double>{v1}),
                                                MarginalValuation::from_values(std::vector<double>{v2})};
      const auto o = posted_price_sell(price, {}, vals, 1);
      EXPECT_EQ(o.alloc[0], 0);
      EXPECT_EQ(o.alloc[1], v2 >= price ? 1 : 0);
    }
  }
}

TEST(Mechanism, DispatchAndNames) {
  const std::vector<BidVector> b{bv({0.5}), bv({0.3})};
  EXPECT_EQ(run_mechanism(FirstPrice{}, b, 1).payments[0], 0.5);
  EXPECT_EQ(run_mechanism(AllPay{}, b, 1).revenue(), 0.8);
  EXPECT_EQ(run_mechanism(UniformPrice{}, b, 1).payments[0], 0.3);
  EXPECT_THROW(run_mechanism(FirstPrice{}, std::vector<BidVector>{bv({1, 1})}, 2), std::invalid_argument);
  EXPECT_EQ(mechanism_name(Discriminatory{}), "discriminatory");
  EXPECT_EQ(mechanism_name(UniformPrice{0.5, std::nullopt}), "uniform(reserve=0.5)");
}
