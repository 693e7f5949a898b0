#include <sstream>

#include <gtest/gtest.h>

#include "softsurv/draw_store.hpp"
#include "softsurv/sim.hpp"

using namespace softsurv;

namespace {

PosteriorDraws small_fit(bool frailty, BaselineFamily family = BaselineFamily::Exponential) {
  SimConfig sim;
  sim.setting = Setting::D;
  sim.clusters = 3;
  sim.cluster_size = 4;
  RngStream rng(81);
  const Dataset data = generate(sim, rng).train;
  FitConfig cfg;
  cfg.trees = 4;
  cfg.burn_in = 10;
  cfg.samples = 12;
  cfg.thin = 2;
  cfg.family = family;
  cfg.frailty = frailty;
  return fit(data, cfg, RngStream(cfg.seed));
}

std::string bytes_of(const PosteriorDraws& d) {
  std::ostringstream out(std::ios::binary);
  write_draw_store(out, d);
  return out.str();
}

PosteriorDraws parse(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_draw_store(in);
}

}  // namespace

TEST(DrawStore, ExactRoundTrip) {
  for (bool frailty : {true, false}) {
    const PosteriorDraws d = small_fit(frailty, frailty ? BaselineFamily::Exponential : BaselineFamily::Weibull);
    const PosteriorDraws back = parse(bytes_of(d));
    ASSERT_EQ(back.draws.size(), d.draws.size());
    EXPECT_EQ(back.covariates, d.covariates);
    EXPECT_EQ(back.iterations, d.iterations);
    EXPECT_EQ(back.cluster_labels, d.cluster_labels);
    EXPECT_EQ(back.scaler.time_scale, d.scaler.time_scale);
    EXPECT_EQ(back.hyper.leaf_scale, d.hyper.leaf_scale);
    EXPECT_EQ(back.config.frailty, d.config.frailty);
    EXPECT_EQ(back.config.family, d.config.family);
    for (std::size_t j = 0; j < d.scaler.columns.size(); ++j) {
      EXPECT_EQ(back.scaler.columns[j].min, d.scaler.columns[j].min);
      EXPECT_EQ(back.scaler.columns[j].max, d.scaler.columns[j].max);
    }
    for (std::size_t k = 0; k < d.draws.size(); ++k) {
      const Draw& a = d.draws[k];
      const Draw& b = back.draws[k];
      EXPECT_EQ(a.baseline.rate, b.baseline.rate);
      EXPECT_EQ(a.baseline.shape, b.baseline.shape);
      EXPECT_EQ(a.frailty, b.frailty);
      EXPECT_EQ(std::isnan(a.eta), std::isnan(b.eta));
      for (std::size_t t = 0; t < a.trees.size(); ++t) {
        ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
        EXPECT_EQ(a.trees[t].bandwidth, b.trees[t].bandwidth);
        for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
          EXPECT_EQ(a.trees[t].nodes[n].cutpoint, b.trees[t].nodes[n].cutpoint);
          EXPECT_EQ(a.trees[t].nodes[n].mu, b.trees[t].nodes[n].mu);
          EXPECT_EQ(a.trees[t].nodes[n].coord, b.trees[t].nodes[n].coord);
        }
      }
    }
    // Rewriting the parsed store reproduces the bytes.
    EXPECT_EQ(bytes_of(back), bytes_of(d));
  }
}

TEST(DrawStore, RepeatedFitsAreByteIdentical) {
  EXPECT_EQ(bytes_of(small_fit(true)), bytes_of(small_fit(true)));
}

TEST(DrawStore, CorruptionIsAParseError) {
  const std::string good = bytes_of(small_fit(true));
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("NOTSURV" + good.substr(7)), ParseError);
  EXPECT_THROW(parse(good.substr(0, good.size() - 3)), ParseError);
  std::string bad_tag = good;
  bad_tag[bad_tag.find("DRAW")] = 'X';
  EXPECT_THROW(parse(bad_tag), ParseError);
  std::string bad_version = good;
  bad_version[8] = 9;
  EXPECT_THROW(parse(bad_version), ParseError);
  std::string bad_json = good;
  bad_json[20] = '!';
  EXPECT_THROW(parse(bad_json), ParseError);
  // Flip every byte of the first record in turn: never crash, either parse or throw ParseError.
  const std::size_t first = good.find("DRAW");
  for (std::size_t i = first + 4; i < std::min(good.size(), first + 400); ++i) {
    std::string s = good;
    s[i] = static_cast<char>(s[i] ^ 0x5a);
    try {
      parse(s);
    } catch (const ParseError&) {
    }
  }
}

TEST(DrawStore, MissingFile) {
  EXPECT_THROW(read_draw_store(std::string("/nonexistent/draws.bin")), ParseError);
}
