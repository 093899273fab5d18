// Copyright 2026 The sasvkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "sasv/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sasv/error.hpp"

namespace sasv {
namespace {

LabeledUtterance utt(std::string id, int speaker, CmLabel cm = CmLabel::bonafide,
                     std::optional<std::string> source = std::nullopt) {
  return {std::move(id), {0.1, 0.2, 0.3}, {speaker}, cm, std::move(source)};
}

Dataset minimal() {
  Dataset d;
  d.name = "toy";
  d.num_speakers = 2;
  d.utterances = {utt("a1", 1), utt("a2", 1), utt("b1", 2), utt("b2", 2)};
  return d;
}

TEST(Embedding, RejectsDegenerateInput) {
  EXPECT_THROW(Embedding({1.0}), ContractError);
  EXPECT_THROW(Embedding({1.0, std::numeric_limits<double>::quiet_NaN()}),
               ContractError);
  EXPECT_THROW(Embedding({1.0, std::numeric_limits<double>::infinity()}),
               ContractError);
  EXPECT_NO_THROW(Embedding({0.0, 0.0}));
}

TEST(Embedding, EqualityIsBitwiseWithoutNormalization) {
  const Embedding a({1.0, 2.0});
  const Embedding b({2.0, 4.0});
  EXPECT_FALSE(a == b);
  EXPECT_TRUE(a == Embedding({1.0, 2.0}));
  EXPECT_DOUBLE_EQ(b.norm(), std::sqrt(20.0));
  EXPECT_EQ(b[1], 4.0);
}

TEST(Labels, ParseAndPrint) {
  EXPECT_EQ(parse_cm_label("bonafide"), CmLabel::bonafide);
  EXPECT_EQ(parse_cm_label("spoof"), CmLabel::spoof);
  EXPECT_FALSE(parse_cm_label("bna").has_value());
  for (VocoderId v : {VocoderId::V1, VocoderId::V2, VocoderId::V3, VocoderId::V4}) {
    EXPECT_EQ(parse_vocoder(to_string(v)), v);
  }
  EXPECT_FALSE(parse_vocoder("V9").has_value());
}

TEST(Labels, SasvClassMapsSpoofToExtraClass) {
  EXPECT_EQ(SasvClassLabel::of({3}, CmLabel::bonafide, 5).index, 3);
  EXPECT_EQ(SasvClassLabel::of({3}, CmLabel::spoof, 5).index, 6);
}

TEST(ValidateDataset, MinimalSetIsClean) {
  EXPECT_TRUE(validate_dataset(minimal()).empty());
}

TEST(ValidateDataset, SpeakerOutOfRangeNamesUtterance) {
  Dataset d = minimal();
  d.utterances.push_back(utt("c1", 3));
  d.utterances.push_back(utt("c2", 3));
  const auto v = validate_dataset(d);
  // Both utterances of speaker 3 are flagged individually.
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].utt_id, "c1");
}

TEST(ValidateDataset, SingleOutOfRangeUtteranceIsOneViolation) {
  Dataset d = minimal();
  d.utterances[3].speaker = {3};
  d.utterances.push_back(utt("b3", 2));
  const auto v = validate_dataset(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].utt_id, "b2");
}

TEST(ValidateDataset, SpoofWithoutSourceIsOneViolation) {
  Dataset d = minimal();
  d.utterances.push_back(utt("s1", 1, CmLabel::spoof));
  const auto v = validate_dataset(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].utt_id, "s1");
}

TEST(ValidateDataset, EachInvariantIsFlagged) {
  {
    Dataset d = minimal();
    d.utterances.push_back(utt("a1", 1));
    EXPECT_FALSE(validate_dataset(d).empty()) << "duplicate id";
  }
  {
    Dataset d = minimal();
    d.utterances[0].features[1] = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(validate_dataset(d).empty()) << "non-finite feature";
  }
  {
    Dataset d = minimal();
    d.utterances[0].features.push_back(1.0);
    EXPECT_FALSE(validate_dataset(d).empty()) << "ragged features";
  }
  {
    Dataset d = minimal();
    d.utterances.pop_back();
    EXPECT_FALSE(validate_dataset(d).empty()) << "speaker with one utterance";
  }
  {
    Dataset d = minimal();
    d.num_speakers = 0;
    EXPECT_FALSE(validate_dataset(d).empty()) << "no speakers";
  }
}

TEST(SpeakerKey, IsZeroPadded) {
  EXPECT_EQ(speaker_key({7}), "spk0007");
}

}  // namespace
}  // namespace sasv
