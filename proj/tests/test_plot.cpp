#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rise/experiment.hpp"
#include "rise/plot.hpp"

using namespace rise;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

}  // namespace

TEST(Plot, EmptyTraceGetsPlaceholder) {
    plot::SvgBuilder b(600);
    b.panel({"empty", "t", "y", {{"a", {}, {}}}, {}});
    EXPECT_EQ(b.warnings(), 1);
    EXPECT_NE(b.str().find("warning: no data (empty trace)"), std::string::npos);

    const std::vector<SimRecord> none;
    const auto files = emit_plots({{"rise", &none}}, {3.12, Vec3(0.1, 0.1, 0.2)});
    EXPECT_EQ(count(files[0].svg, "warning: no data"), 4u);
}

TEST(Plot, EstimatesHaveFourPanelsWithTruthLines) {
    ScenarioConfig cfg = ScenarioConfig::paper();
    cfg.duration = 1.0;
    const SimTrace a = run_scenario(cfg);
    const auto files = emit_plots({{"rise", &a.records}, {"again", &a.records}}, cfg.vehicle.to_params());
    ASSERT_EQ(files.size(), 5u);
    EXPECT_EQ(files[0].name, "estimates.svg");
    const std::string& svg = files[0].svg;
    EXPECT_EQ(count(svg, "<polyline"), 8u);  // 4 panels x 2 traces
    EXPECT_EQ(count(svg, ">truth</text>"), 4u);
    EXPECT_EQ(count(svg, "estimate of "), 4u);
    EXPECT_EQ(count(files[1].svg, ">+2%</text>"), 1u);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
}

TEST(Plot, DecimationKeepsExtremes) {
    plot::Series s{"s", {}, {}, false};
    for (int i = 0; i < 100000; ++i) {
        s.x.push_back(i);
        s.y.push_back(i == 4321 ? 50.0 : i == 77777 ? -40.0 : std::sin(i * 1e-3));
    }
    const auto d = plot::decimate(s, 500);
    EXPECT_LE(d.x.size(), 1000u);
    EXPECT_EQ(*std::max_element(d.y.begin(), d.y.end()), 50.0);
    EXPECT_EQ(*std::min_element(d.y.begin(), d.y.end()), -40.0);
    EXPECT_TRUE(std::is_sorted(d.x.begin(), d.x.end()));
    const auto small = plot::decimate(plot::Series{"s", {0, 1}, {0, 1}, false}, 500);
    EXPECT_EQ(small.x.size(), 2u);
}

TEST(Plot, EscapesLabels) {
    EXPECT_EQ(plot::escape("a<b & \"c\">"), "a&lt;b &amp; &quot;c&quot;&gt;");
    EXPECT_EQ(plot::nice_step(10.0), 2.0);
    EXPECT_EQ(plot::nice_step(0.0), 1.0);
}
