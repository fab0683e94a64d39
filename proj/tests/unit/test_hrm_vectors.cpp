// Decodes every vectors/hrm/*.hex file and compares with the adjacent .txt.

#include <gtest/gtest.h>

#include <set>

#include "hrm_corpus.hpp"

using namespace shesop;
using namespace shesop::wire;

TEST(HrmVectors, CorpusIsPresent) { EXPECT_GE(corpus::hex_files(SHESOP_VECTORS_DIR).size(), 10u); }

TEST(HrmVectors, EveryVectorDecodesAsDocumented) {
  for (const auto& hex : corpus::hex_files(SHESOP_VECTORS_DIR)) {
    SCOPED_TRACE(hex.filename().string());
    const auto txt = corpus::fields_path(hex);
    ASSERT_TRUE(std::filesystem::exists(txt));
    const auto bytes = corpus::read_hex(hex);
    const auto want = corpus::read_fields(txt);
    EXPECT_EQ(corpus::decoded_fields(bytes), want);

    // re-encoding is byte-exact except where the contact pattern 01 normalizes
    const auto got = try_decode_packet(bytes);
    if (got && (bytes[0] & 0x06) != 0x02) EXPECT_EQ(encode_packet(*got.packet), bytes);
  }
}

TEST(HrmVectors, FieldFilesUseTheKnownKeys) {
  const std::set<std::string> keys{"heart_rate", "hr_16bit", "sensor_contact", "energy_expended", "rr_raw", "reserved"};
  for (const auto& hex : corpus::hex_files(SHESOP_VECTORS_DIR)) {
    const auto f = corpus::read_fields(corpus::fields_path(hex));
    if (f.count("error")) {
      EXPECT_EQ(f.size(), 1u) << hex;
      continue;
    }
    std::set<std::string> seen;
    for (const auto& [k, v] : f) seen.insert(k);
    EXPECT_EQ(seen, keys) << hex;
  }
}
