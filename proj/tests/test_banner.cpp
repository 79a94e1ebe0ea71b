#include <gtest/gtest.h>

#include "cookieflow/banner.hpp"
#include "cookieflow/error.hpp"

using namespace cookieflow;

namespace {

BannerLayer layer(std::vector<BannerButton> buttons, std::vector<BannerToggle> toggles = {}) {
  return {std::move(buttons), std::move(toggles)};
}

BannerDescriptor banner(std::vector<BannerLayer> layers, BannerType type = BannerType::Native) {
  return {type, std::move(layers)};
}

bool has_accept_click(const RejectionPlan& plan) {
  for (const auto& c : plan.clicks)
    if (c.action == ButtonAction::Accept) return true;
  return false;
}

}  // namespace

TEST(SynonymTable, DataFileMatchesDefaults) {
  EXPECT_EQ(SynonymTable::load(COOKIEFLOW_DATA_DIR "/banner_synonyms.json"), SynonymTable::defaults());
}

TEST(SynonymTable, LabelWinsOverDeclaredAction) {
  const auto t = SynonymTable::defaults();
  EXPECT_EQ(t.classify({"  Reject   ALL ", ButtonAction::Other}), ButtonAction::Reject);
  EXPECT_EQ(t.classify({"Alle ablehnen", ButtonAction::Other}), ButtonAction::Reject);
  EXPECT_EQ(t.classify({"Something else", ButtonAction::Save}), ButtonAction::Save);
  EXPECT_EQ(t.classify({"Accept all", ButtonAction::Reject}), ButtonAction::Accept);
}

TEST(SynonymTable, ParseErrors) {
  try {
    SynonymTable::parse("{\"reject\": 3}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(PlanRejection, MainLayerReject) {
  const auto plan = plan_rejection(banner({layer({{"Accept all", ButtonAction::Accept}, {"Reject all", ButtonAction::Reject}})}));
  EXPECT_EQ(plan.outcome, RejectionOutcome::Rejected);
  EXPECT_EQ(plan.clicks, (std::vector<PlannedClick>{{0, 1, ButtonAction::Reject}}));
}

TEST(PlanRejection, SettingsThenReject) {
  const auto plan = plan_rejection(banner({layer({{"Accept", ButtonAction::Accept}, {"Settings", ButtonAction::Settings}}),
                                           layer({{"Decline all", ButtonAction::Reject}})}));
  EXPECT_EQ(plan.outcome, RejectionOutcome::Rejected);
  EXPECT_EQ(plan.clicks,
            (std::vector<PlannedClick>{{0, 1, ButtonAction::Settings}, {1, 0, ButtonAction::Reject}}));
}

TEST(PlanRejection, SaveWithTogglesOff) {
  const auto plan = plan_rejection(banner(
      {layer({{"Accept", ButtonAction::Accept}, {"Settings", ButtonAction::Settings}}),
       layer({{"SAVE & EXIT", ButtonAction::Save}}, {{"necessary", true, true}, {"analytics", false, false}})}));
  EXPECT_EQ(plan.outcome, RejectionOutcome::Rejected);
  ASSERT_EQ(plan.clicks.size(), 2u);
  EXPECT_EQ(plan.clicks[1].action, ButtonAction::Save);
}

TEST(PlanRejection, PreselectedToggleIsAcceptRisk) {
  const auto plan = plan_rejection(banner(
      {layer({{"Accept", ButtonAction::Accept}, {"Settings", ButtonAction::Settings}}),
       layer({{"Save", ButtonAction::Save}}, {{"analytics", true, false}})}));
  EXPECT_EQ(plan.outcome, RejectionOutcome::AcceptRisk);
  EXPECT_FALSE(has_accept_click(plan));
}

TEST(PlanRejection, NoPathFails) {
  const auto plan = plan_rejection(banner({layer({{"Accept", ButtonAction::Accept}})}));
  EXPECT_EQ(plan.outcome, RejectionOutcome::Failed);
  EXPECT_TRUE(plan.clicks.empty());
}

// A button mislabelled in the data but named "Accept all" is never clicked
// while rejecting.
TEST(PlanRejection, NeverClicksAccept) {
  const auto plan = plan_rejection(banner({layer({{"Accept all", ButtonAction::Reject}})}));
  EXPECT_FALSE(has_accept_click(plan));
  EXPECT_EQ(plan.outcome, RejectionOutcome::Failed);
}

TEST(PlanAccept, MainLayerOnly) {
  EXPECT_EQ(plan_accept(banner({layer({{"Settings", ButtonAction::Settings}, {"OK", ButtonAction::Other}})})),
            (PlannedClick{0, 1, ButtonAction::Accept}));
  EXPECT_FALSE(plan_accept(banner({layer({{"Settings", ButtonAction::Settings}}), layer({{"Accept", ButtonAction::Accept}})})));
}
