#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "shesop/datasets.hpp"

using namespace shesop;
using namespace shesop::datasets;
using sources::ProfileKind;

TEST(Dataset, SeedsAreDistinctPerSample) {
  std::set<std::uint64_t> seen;
  for (auto p : {ProfileKind::rest, ProfileKind::stress, ProfileKind::influenza}) {
    for (std::size_t i = 0; i < 500; ++i) seen.insert(sample_seed(7, p, i));
  }
  EXPECT_EQ(seen.size(), 1500u);
}

TEST(Dataset, GroupedByProfileAndDeterministic) {
  DatasetConfig cfg;
  cfg.per_profile = 5;
  cfg.duration_s = 120;
  const auto a = generate_dataset(cfg);
  ASSERT_EQ(a.rows.size(), 10u);
  EXPECT_EQ(a.names, svm::default_feature_names());
  EXPECT_EQ(a.rows[0].label, "rest");
  EXPECT_EQ(a.rows[9].label, "stress");
  EXPECT_EQ(a, generate_dataset(cfg));
  cfg.seed = 8;
  EXPECT_NE(a, generate_dataset(cfg));
}

TEST(Dataset, ProfilesDifferAsDesigned) {
  // rest vs stress, seed 42, 600 s
  const auto rest = simulate_report(ProfileKind::rest, 42, 600);
  const auto stress = simulate_report(ProfileKind::stress, 42, 600);
  EXPECT_GT(rest.time.mean_rr_ms, stress.time.mean_rr_ms);
  EXPECT_GT(rest.freq.hf_power_ms2, stress.freq.hf_power_ms2);
  EXPECT_LT(*rest.freq.lf_hf, *stress.freq.lf_hf);
}

TEST(FeaturesCsv, RoundTripIsExact) {
  DatasetConfig cfg;
  cfg.per_profile = 3;
  cfg.duration_s = 120;
  const auto t = generate_dataset(cfg);
  std::stringstream io;
  write_features_csv(io, t);
  EXPECT_EQ(read_features_csv(io), t);
}

TEST(FeaturesCsv, ParseErrorsNameTheLine) {
  auto line_of = [](const std::string& text) {
    std::stringstream io(text);
    try {
      read_features_csv(io);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
      return e.detail().substr(0, e.detail().find(':'));
    }
    return std::string("accepted");
  };
  EXPECT_EQ(line_of(""), "line 1");
  EXPECT_EQ(line_of("name,a\n"), "line 1");
  EXPECT_EQ(line_of("label,a,b\nrest,1,2\nrest,1\n"), "line 3");
  EXPECT_EQ(line_of("label,a\nrest,x\n"), "line 2");
  EXPECT_EQ(line_of("label,a\n,1\n"), "line 2");
  EXPECT_EQ(line_of("label,a\nrest,nan\n"), "line 2");
}

TEST(FeaturesCsv, ToSamplesLabelsPositives) {
  FeatureTable t{{"a"}, {{"rest", {1}}, {"stress", {2}}, {"influenza", {3}}}};
  const auto s = to_samples(t, {"stress", "influenza"});
  EXPECT_EQ(s[0].label, -1);
  EXPECT_EQ(s[1].label, 1);
  EXPECT_EQ(s[2].label, 1);
  EXPECT_EQ(s[2].x.names, t.names);
}
