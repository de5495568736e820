#include <gtest/gtest.h>

#include <filesystem>

#include "ftp/digest.hpp"
#include "ftp/prompt_codec.hpp"
#include "support.hpp"

using namespace ftp;
using namespace ftp::prompt;

namespace {

const Waypoint kReference{1727926166, 13.61184, 50.48944, 10058.4, 968.596, 125.0};

Window window_ending_at(double lon, double lat) {
  Window w = fixtures::linear_window(1, lon, lat, 0.0, 0.0, 9000, 0);
  return w;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ftp_prompt_" + name);
}

}  // namespace

TEST(SerializeWaypoints, ReferenceWaypoint) {
  const Waypoint ws[] = {kReference};
  EXPECT_EQ(serialize_waypoints(ws), "(13.61184, 50.48944, 10058.400, 968.596, 125.00)");
}

TEST(SerializeWaypoints, ZeroWaypoint) {
  const Waypoint ws[] = {Waypoint{}};
  EXPECT_EQ(serialize_waypoints(ws), "(0.00000, 0.00000, 0.000, 0.000, 0.00)");
}

TEST(SerializeWaypoints, TwoLinesNoTrailingNewline) {
  const Waypoint ws[] = {kReference, Waypoint{}};
  const auto s = serialize_waypoints(ws);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1);
  EXPECT_NE(s.back(), '\n');
}

TEST(BuildPrompt, AssistantHoldsTargetsOnlyWhenAsked) {
  fixtures::Rng rng(2);
  const Window w = fixtures::random_window(rng, 1);
  const auto train = build_prompt(w, true);
  EXPECT_EQ(std::count(train.assistant.begin(), train.assistant.end(), '\n'), 0);
  EXPECT_FALSE(train.assistant.empty());
  EXPECT_TRUE(build_prompt(w, false).assistant.empty());
  EXPECT_EQ(build_prompt(w, true), train);
  EXPECT_EQ(train.template_version, kTemplateVersion);
}

TEST(BuildPrompt, SystemTextStatesHorizonAndAttributes) {
  for (int h : {1, 4, 8}) {
    const auto s = system_prompt(h);
    EXPECT_EQ(parse_horizon(s), h);
    EXPECT_NE(s.find("You are an expert in flight prediction"), std::string::npos);
    EXPECT_NE(s.find("kilometers per hour"), std::string::npos);
  }
  EXPECT_NE(system_prompt(1).find("next 1 waypoint "), std::string::npos);
}

TEST(BuildPrompt, UserTextHoldsSixteenTuples) {
  fixtures::Rng rng(4);
  const auto r = build_prompt(fixtures::random_window(rng, 4), false);
  EXPECT_EQ(extract_tuples(r.user).size(), 16u);
}

TEST(ParseCompletion, EmptyIsMissing) {
  const auto o = parse_completion("", 4, window_ending_at(103.2, 30.5));
  ASSERT_FALSE(o.ok());
  EXPECT_EQ(o.failure().kind, FailureKind::MissingTrajectory);
}

TEST(ParseCompletion, ProseWithoutTuplesIsMissing) {
  const auto o = parse_completion("The aircraft will continue northeast.", 1, window_ending_at(103.2, 30.5));
  ASSERT_FALSE(o.ok());
  EXPECT_EQ(o.failure().kind, FailureKind::MissingTrajectory);
}

TEST(ParseCompletion, ArityThreeIsUnexpectedFormat) {
  const auto o = parse_completion("(103.2, 30.5, 10000)", 1, window_ending_at(103.2, 30.5));
  ASSERT_FALSE(o.ok());
  EXPECT_EQ(o.failure().kind, FailureKind::UnexpectedFormat);
}

TEST(ParseCompletion, TooFewTuplesIsUnexpectedFormat) {
  const auto o = parse_completion("(103.2, 30.5, 10000, 800, 90)", 4, window_ending_at(103.2, 30.5));
  ASSERT_FALSE(o.ok());
  EXPECT_EQ(o.failure().kind, FailureKind::UnexpectedFormat);
}

TEST(ParseCompletion, NonNumericFieldIsUnexpectedFormat) {
  const auto o = parse_completion("(103.2, 30.5, high, 800, 90)", 1, window_ending_at(103.2, 30.5));
  ASSERT_FALSE(o.ok());
  EXPECT_EQ(o.failure().kind, FailureKind::UnexpectedFormat);
}

TEST(ParseCompletion, SignFlipIsSevere) {
  const auto o = parse_completion("(-103.20000, 30.50000, 10000.000, 800.000, 90.00)", 1, window_ending_at(103.2, 30.5));
  ASSERT_FALSE(o.ok());
  EXPECT_EQ(o.failure().kind, FailureKind::SevereDeviation);
}

TEST(ParseCompletion, ToleratesProseMarkdownAndExtras) {
  const Window ctx = window_ending_at(103.2, 30.5);
  const std::string text =
      "Sure! Here are the predictions:\n```\n(**103.30000**, 30.60000, 10000.000, 800.000, 90.00)\n"
      "(103.40000, 30.70000, 10000.000, 800.000, 90.00)\n```\nThat is all.";
  const auto o = parse_completion(text, 1, ctx);
  ASSERT_TRUE(o.ok());
  ASSERT_EQ(o.waypoints().size(), 1u);
  EXPECT_EQ(o.waypoints()[0].longitude, 103.3);
  EXPECT_EQ(o.waypoints()[0].timestamp, ctx.last_input().timestamp + 60);
  EXPECT_FALSE(o.note().empty());
}

TEST(ParseCompletion, RoundTripsRandomWindows) {
  fixtures::Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const int h = std::array{1, 4, 8}[static_cast<std::size_t>(i % 3)];
    const Window w = fixtures::random_window(rng, h);
    const auto o = parse_completion(serialize_waypoints(w.targets), h, w);
    ASSERT_TRUE(o.ok()) << o.failure().diagnostic;
    EXPECT_EQ(o.waypoints(), w.targets);
  }
}

TEST(ParseCompletion, NeverThrowsOnArbitraryBytes) {
  fixtures::Rng rng(13);
  const Window ctx = window_ending_at(103.2, 30.5);
  const std::string alphabet = "()0123456789.,- \n*`_abcE+";
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    const int len = fixtures::uniform_int(rng, 0, 200);
    for (int k = 0; k < len; ++k) {
      s.push_back(fixtures::uniform_int(rng, 0, 3) == 0
                      ? static_cast<char>(fixtures::uniform_int(rng, 0, 255))
                      : alphabet[static_cast<std::size_t>(fixtures::uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1))]);
    }
    EXPECT_NO_THROW(parse_completion(s, fixtures::uniform_int(rng, 1, 8), ctx));
  }
  EXPECT_NO_THROW(parse_completion("(" + std::string(5000, '9') + ", 1, 1, 1, 1)", 1, ctx));
}

TEST(ClassifySevere, Examples) {
  const Window ctx = window_ending_at(103.2, 30.5);
  Waypoint p = ctx.last_input();
  EXPECT_FALSE(classify_severe(p, ctx));
  p.longitude = -103.2;
  EXPECT_TRUE(classify_severe(p, ctx));
  p.longitude = 104.0;
  EXPECT_FALSE(classify_severe(p, ctx));
  p.longitude = 108.3;
  EXPECT_TRUE(classify_severe(p, ctx));
  p.longitude = 103.2;
  p.latitude = 91.0;
  EXPECT_TRUE(classify_severe(p, ctx));
}

TEST(ClassifySevere, SmallCoordinatesMayCrossZero) {
  const Window ctx = window_ending_at(0.5, -0.4);
  Waypoint p = ctx.last_input();
  p.longitude = -0.2;
  p.latitude = 0.3;
  EXPECT_FALSE(classify_severe(p, ctx));
}

TEST(ClassifySevere, LastInputIsNeverSevere) {
  fixtures::Rng rng(21);
  for (int i = 0; i < 1000; ++i) {
    const Window w = fixtures::random_window(rng, 1);
    EXPECT_FALSE(classify_severe(w.last_input(), w));
  }
}

TEST(EmitDataset, ZeroRecords) {
  const auto path = temp_path("empty.jsonl");
  emit_dataset({}, path, 4, "abc");
  EXPECT_EQ(read_file(path), "");
  const auto d = read_dataset(path);
  EXPECT_EQ(d.manifest.record_count, 0u);
  EXPECT_EQ(d.manifest.horizon, 4);
}

TEST(EmitDataset, TwoRecordsDeterministic) {
  fixtures::Rng rng(6);
  std::vector<PromptRecord> recs{build_prompt(fixtures::random_window(rng, 4), true),
                                 build_prompt(fixtures::random_window(rng, 4), true)};
  const auto a = temp_path("a.jsonl");
  const auto b = temp_path("b.jsonl");
  emit_dataset(recs, a, 4, sha256_hex("src"));
  emit_dataset(recs, b, 4, sha256_hex("src"));
  const auto text = read_file(a);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(text, read_file(b));
  EXPECT_EQ(read_file(manifest_path(a)), read_file(manifest_path(b)));
  const auto d = read_dataset(a);
  EXPECT_EQ(d.records, recs);
  EXPECT_EQ(d.manifest.source_digest, sha256_hex("src"));
  EXPECT_EQ(text.substr(0, 10), "{\"system\":");
}

TEST(EmitDataset, MixedVersionsRejected) {
  fixtures::Rng rng(6);
  auto r1 = build_prompt(fixtures::random_window(rng, 1), true);
  auto r2 = r1;
  r2.template_version = "other";
  const std::vector<PromptRecord> recs{r1, r2};
  EXPECT_THROW(emit_dataset(recs, temp_path("mixed.jsonl"), 1, ""), Error);
}

TEST(EstimateTokens, Examples) {
  EXPECT_EQ(estimate_tokens("103.25", TokenScheme::DigitSplit), 3u);
  EXPECT_EQ(estimate_tokens("103.25", TokenScheme::NumberAtomic), 1u);
  EXPECT_EQ(estimate_tokens("", TokenScheme::DigitSplit), 0u);
  EXPECT_EQ(estimate_tokens("", TokenScheme::NumberAtomic), 0u);
  EXPECT_EQ(estimate_tokens("(1.0, 2.0)", TokenScheme::NumberAtomic), 6u);
}

TEST(EstimateTokens, DigitSplitNeverBelowNumberAtomic) {
  fixtures::Rng rng(31);
  const std::string alphabet = "0123456789.. ,()abc\n";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (int k = fixtures::uniform_int(rng, 0, 80); k > 0; --k) {
      s.push_back(alphabet[static_cast<std::size_t>(fixtures::uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1))]);
    }
    EXPECT_GE(estimate_tokens(s, TokenScheme::DigitSplit), estimate_tokens(s, TokenScheme::NumberAtomic));
  }
}

TEST(Digest, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
