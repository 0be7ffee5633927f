// Copyright 2026 The blurbt Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <random>

#include "blurbt/dataset.hpp"
#include "test_support.hpp"

namespace blurbt {
namespace {

using testing::ScratchDir;

ErrorCode load_error(const std::string& text) {
  try {
    manifest_from_json(json::parse(text));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

// Image i gets (i < food) food objects and (i < bev) beverage objects, so
// per-split counts are exactly the requested ones.
DatasetManifest counted_manifest(const std::vector<std::tuple<Split, int, int, int>>& splits) {
  DatasetManifest m;
  int serial = 0;
  for (const auto& [split, n_img, n_food, n_bev] : splits) {
    for (int i = 0; i < n_img; ++i) {
      const std::string id = "im" + std::to_string(serial++);
      m.images.push_back({id, id + ".pgm", 64, 64, split});
      for (int k = i; k < n_food; k += n_img) m.annotations.push_back({id, {1, 1, 10, 10}, "food"});
      for (int k = i; k < n_bev; k += n_img) m.annotations.push_back({id, {20, 20, 8, 8}, "beverage"});
    }
  }
  return m;
}

TEST(LoadManifest, EmptyIsValid) {
  const auto m = manifest_from_json(json::parse(R"({"images":[],"annotations":[]})"));
  EXPECT_TRUE(m.images.empty());
  EXPECT_EQ(m.categories, (std::vector<std::string>{"food", "beverage"}));
}

TEST(LoadManifest, Errors) {
  EXPECT_EQ(load_error(R"({"images":[],"annotations":[{"image_id":"x","bbox":[0,0,1,1],"category":"food"}]})"),
            ErrorCode::kDanglingAnnotation);
  EXPECT_EQ(load_error(R"({"images":[{"id":"a","path":"a","width":4,"height":4,"split":"training"},
                                     {"id":"a","path":"b","width":4,"height":4,"split":"testing"}],
                           "annotations":[]})"),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(load_error(R"({"images":[{"id":"a","path":"a","width":4,"height":4,"split":"training"}],
                           "annotations":[{"image_id":"a","bbox":[2,2,3,1],"category":"food"}]})"),
            ErrorCode::kBoxOutOfBounds);
  EXPECT_EQ(load_error(R"({"images":[{"id":"a","path":"a","width":4,"height":4,"split":"training"}],
                           "annotations":[{"image_id":"a","bbox":[0,0,0,1],"category":"food"}]})"),
            ErrorCode::kBoxOutOfBounds);
  EXPECT_EQ(load_error(R"({"images":[{"id":"a","path":"a","width":4,"height":4,"split":"training"}],
                           "annotations":[{"image_id":"a","bbox":[0,0,1,1],"category":"plate"}]})"),
            ErrorCode::kUnknownCategory);
  EXPECT_EQ(load_error(R"({"images":[{"id":"a","path":"a","width":4,"height":4,"split":"train"}],
                           "annotations":[]})"),
            ErrorCode::kParseError);
  EXPECT_EQ(load_error(R"({"images":[{"id":"a"}],"annotations":[]})"), ErrorCode::kParseError);
}

TEST(LoadManifest, ErrorNamesRecordIndex) {
  try {
    manifest_from_json(json::parse(
        R"({"images":[{"id":"a","path":"a","width":4,"height":4,"split":"training"}],
            "annotations":[{"image_id":"a","bbox":[0,0,1,1],"category":"food"},
                           {"image_id":"zz","bbox":[0,0,1,1],"category":"food"}]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("annotations[1]"), std::string::npos);
  }
}

TEST(LoadManifest, ExtraCategoriesParse) {
  const auto m = manifest_from_json(json::parse(
      R"({"images":[{"id":"a","path":"a","width":4,"height":4,"split":"training"}],
          "annotations":[{"image_id":"a","bbox":[0,0,1,1],"category":"utensil"}],
          "categories":["food","beverage","utensil"],"meta":{"tool":"x"}})"));
  EXPECT_EQ(m.categories.size(), 3u);
}

TEST(LoadManifest, LargeSplitsEchoExactly) {
  ScratchDir dir("manifest");
  const auto m = counted_manifest({{Split::kTraining, 4333, 4033, 2239},
                                   {Split::kValidation, 585, 570, 288},
                                   {Split::kTesting, 500, 472, 264}});
  save_manifest(m, dir / "m.json");
  const auto loaded = load_manifest(dir / "m.json");
  EXPECT_EQ(split_counts(loaded, Split::kTraining), (ObjectCounts{4333, 4033, 2239, 6272}));
  EXPECT_EQ(split_counts(loaded, Split::kValidation), (ObjectCounts{585, 570, 288, 858}));
  EXPECT_EQ(split_counts(loaded, Split::kTesting), (ObjectCounts{500, 472, 264, 736}));
}

TEST(Manifest, CanonicalRoundTrip) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 10; ++trial) {
    DatasetManifest m;
    const int n = testing::uniform_int(rng, 0, 12);
    for (int i = 0; i < n; ++i) {
      const std::string id = "i" + std::to_string(i);
      m.images.push_back({id, "p/" + id + ".png", 50, 40, static_cast<Split>(i % 3)});
      m.annotations.push_back({id,
                               {testing::uniform(rng, 0, 20), testing::uniform(rng, 0, 20),
                                testing::uniform(rng, 0.1, 20), testing::uniform(rng, 0.1, 20)},
                               i % 2 ? "food" : "beverage"});
    }
    const std::string once = dump_json(manifest_to_json(m));
    const auto back = manifest_from_json(json::parse(once));
    EXPECT_EQ(back, m);
    EXPECT_EQ(dump_json(manifest_to_json(back)), once);
  }
}

TEST(ScoresCsv, FormatAndParse) {
  const std::vector<BlurScore> scores{{"a", 1.0}, {"b_2", 12.3456789012}};
  const std::string csv = scores_to_csv(scores);
  EXPECT_EQ(csv, "image_id,variance_of_laplacian\na,1.000000000\nb_2,12.345678901\n");
  const auto back = scores_from_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].image_id, "b_2");
  EXPECT_DOUBLE_EQ(back[1].variance_of_laplacian, 12.345678901);
  EXPECT_THROW(scores_from_csv("a,abc\n"), Error);
  EXPECT_THROW(scores_from_csv("a,-1\n"), Error);
  EXPECT_THROW(scores_from_csv("nocomma\n"), Error);
}

DatasetManifest three_split_manifest() {
  DatasetManifest m;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "t" + std::to_string(i);
    m.images.push_back({id, id, 32, 32, Split::kTraining});
    m.annotations.push_back({id, {0, 0, 5, 5}, i % 2 ? "food" : "beverage"});
  }
  m.images.push_back({"v0", "v0", 32, 32, Split::kValidation});
  m.annotations.push_back({"v0", {1, 1, 5, 5}, "food"});
  m.images.push_back({"s0", "s0", 32, 32, Split::kTesting});
  m.annotations.push_back({"s0", {2, 2, 5, 5}, "beverage"});
  return m;
}

TEST(FilterTraining, ZeroThresholdIsIdentity) {
  const auto m = three_split_manifest();
  std::vector<BlurScore> scores;
  for (int i = 0; i < 6; ++i) scores.push_back({"t" + std::to_string(i), 0.0});
  const auto r = filter_training(m, scores, BlurThreshold{0});
  EXPECT_EQ(r.manifest, m);
  EXPECT_EQ(r.report.kept_images, 6u);
  EXPECT_TRUE(r.report.rejected_image_ids.empty());
}

TEST(FilterTraining, ThresholdAboveMaxRemovesAllTraining) {
  const auto m = three_split_manifest();
  std::vector<BlurScore> scores;
  for (int i = 0; i < 6; ++i) scores.push_back({"t" + std::to_string(i), 3.0 + i});
  const auto r = filter_training(m, scores, BlurThreshold{100});
  EXPECT_EQ(split_counts(r.manifest, Split::kTraining).images, 0u);
  EXPECT_EQ(r.report.kept_images, 0u);
  EXPECT_EQ(r.report.rejected_image_ids.size(), 6u);
  // Validation and testing records pass through unchanged.
  ASSERT_EQ(r.manifest.images.size(), 2u);
  EXPECT_EQ(r.manifest.images[0], m.images[6]);
  EXPECT_EQ(r.manifest.images[1], m.images[7]);
  ASSERT_EQ(r.manifest.annotations.size(), 2u);
  EXPECT_EQ(r.manifest.annotations[0], m.annotations[6]);
  EXPECT_EQ(r.manifest.annotations[1], m.annotations[7]);
}

TEST(FilterTraining, MissingScoreIsAnError) {
  const auto m = three_split_manifest();
  try {
    filter_training(m, {{"t0", 1.0}}, BlurThreshold{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingScore);
  }
}

TEST(FilterTraining, PlantedExtremeBlurImages) {
  // 100 training images; the first 10 are planted below the threshold.
  DatasetManifest m;
  std::vector<BlurScore> scores;
  std::mt19937_64 rng(21);
  std::size_t expect_food = 0;
  for (int i = 0; i < 100; ++i) {
    const std::string id = "p" + std::to_string(i);
    m.images.push_back({id, id, 64, 64, Split::kTraining});
    const int objects = testing::uniform_int(rng, 0, 3);
    for (int k = 0; k < objects; ++k) {
      const bool food = testing::uniform_int(rng, 0, 1);
      m.annotations.push_back({id, {1.0 * k, 1, 3, 3}, food ? "food" : "beverage"});
      if (i >= 10 && food) ++expect_food;
    }
    scores.push_back({id, i < 10 ? testing::uniform(rng, 0, 9.9) : testing::uniform(rng, 10, 500)});
  }
  const auto r = filter_training(m, scores, BlurThreshold{10});
  EXPECT_EQ(r.report.kept_images, 90u);
  EXPECT_EQ(r.report.rejected_image_ids.size(), 10u);
  // Recount directly from the filtered manifest.
  EXPECT_EQ(split_counts(r.manifest, Split::kTraining).images, 90u);
  EXPECT_EQ(r.report.kept_food, expect_food);
  EXPECT_EQ(split_counts(r.manifest, Split::kTraining).food, expect_food);
}

TEST(FilterTraining, ExtraSplitsCanBeFiltered) {
  const auto m = three_split_manifest();
  std::vector<BlurScore> scores;
  for (const auto& img : m.images) scores.push_back({img.id, img.id == "v0" ? 1.0 : 50.0});
  const auto r = filter_training(m, scores, BlurThreshold{5}, {Split::kTraining, Split::kValidation});
  EXPECT_EQ(split_counts(r.manifest, Split::kValidation).images, 0u);
  EXPECT_EQ(split_counts(r.manifest, Split::kTesting).images, 1u);
  EXPECT_EQ(r.report.kept_images, 6u);
}

TEST(FilterProperty, NestedKeptSetsAndAnnotationConservation) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    DatasetManifest m;
    std::vector<BlurScore> scores;
    for (int i = 0; i < 60; ++i) {
      const std::string id = "q" + std::to_string(i);
      m.images.push_back({id, id, 64, 64, static_cast<Split>(testing::uniform_int(rng, 0, 2))});
      for (int k = testing::uniform_int(rng, 0, 3); k > 0; --k) {
        m.annotations.push_back({id, {0, 0, 4, 4}, k % 2 ? "food" : "beverage"});
      }
      scores.push_back({id, testing::uniform(rng, 0, 25)});
    }
    std::vector<FilterReport> reports;
    std::set<std::string> prev_kept;
    bool first = true;
    for (double bt : {0.0, 5.0, 10.0, 15.0, 20.0}) {
      const auto r = filter_training(m, scores, BlurThreshold{bt});
      std::set<std::string> kept;
      for (const auto& img : r.manifest.images) {
        if (img.split == Split::kTraining) kept.insert(img.id);
      }
      if (!first) {
        for (const auto& id : kept) ASSERT_TRUE(prev_kept.contains(id));
      }
      for (const auto& a : r.manifest.annotations) ASSERT_NE(r.manifest.find_image(a.image_id), nullptr);
      const auto c = split_counts(r.manifest, Split::kTraining);
      EXPECT_EQ(r.report.kept_food + r.report.kept_beverage, c.food + c.beverage);
      EXPECT_EQ(r.report.kept_images + r.report.rejected_image_ids.size(), r.report.unfiltered.images);
      EXPECT_EQ(split_counts(r.manifest, Split::kValidation), split_counts(m, Split::kValidation));
      EXPECT_EQ(split_counts(r.manifest, Split::kTesting), split_counts(m, Split::kTesting));
      reports.push_back(r.report);
      prev_kept = kept;
      first = false;
    }
    const auto table = count_table(reports);
    for (std::size_t i = 1; i < table.columns.size(); ++i) {
      EXPECT_LE(table.columns[i].images, table.columns[i - 1].images);
      EXPECT_LE(table.columns[i].food, table.columns[i - 1].food);
      EXPECT_LE(table.columns[i].beverage, table.columns[i - 1].beverage);
    }
  }
}

TEST(CountTable, LargeZeroColumn) {
  const auto m = counted_manifest({{Split::kTraining, 4333, 4033, 2239}});
  std::vector<BlurScore> scores;
  for (const auto& img : m.images) scores.push_back({img.id, 3.0});
  const auto table = count_table({filter_training(m, scores, BlurThreshold{0}).report});
  ASSERT_EQ(table.columns.size(), 1u);
  EXPECT_EQ(table.columns[0], (CountColumn{0.0, 4333, 4033, 2239}));
}

TEST(CountTable, EmptyAndUnsorted) {
  EXPECT_TRUE(count_table({}).columns.empty());
  FilterReport a, b;
  a.bt = 5;
  b.bt = 0;
  EXPECT_THROW(count_table({a, b}), Error);
}

TEST(BtLabel, Formatting) {
  EXPECT_EQ(bt_label(0), "BT=0");
  EXPECT_EQ(bt_label(10), "BT=10");
  EXPECT_EQ(bt_label(2.5), "BT=2.5");
}

TEST(RandomSplit, DeterministicWithExactSizes) {
  const auto a = random_split(100, 70, 20, 5);
  EXPECT_EQ(a, random_split(100, 70, 20, 5));
  EXPECT_NE(a, random_split(100, 70, 20, 6));
  EXPECT_EQ(std::count(a.begin(), a.end(), Split::kTraining), 70);
  EXPECT_EQ(std::count(a.begin(), a.end(), Split::kValidation), 20);
  EXPECT_EQ(std::count(a.begin(), a.end(), Split::kTesting), 10);
  EXPECT_THROW(random_split(10, 8, 5, 0), Error);
}

}  // namespace
}  // namespace blurbt
