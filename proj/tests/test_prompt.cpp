#include "ddsynth/prompt.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace ddsynth;

namespace {

const ColorTable& shipped() {
  static const ColorTable table = ColorTable::load(std::string(DDSYNTH_DATA_DIR) + "/colors.csv");
  return table;
}

ViewCatalog small_catalog() {
  return ViewCatalog({std::vector<std::string>{"TCP", "UDP", "ICMP"},
                      std::vector<std::string>{"10.0.0.0/24", "153.101.21.0/24"},
                      std::vector<std::string>{"benign", "syn-flood", "udp-flood"}},
                     PromptTemplates{});
}

std::size_t count_color_names(const std::string& text, const ColorTable& table) {
  // Count table names that occur as a whole "... is <name> style" token.
  std::size_t n = 0;
  for (const auto& e : table.entries())
    for (auto pos = text.find("is " + e.name + " style"); pos != std::string::npos;
         pos = text.find("is " + e.name + " style", pos + 1))
      ++n;
  return n;
}

}  // namespace

TEST_CASE("shipped table: size, order, checksum, content") {
  const auto& t = shipped();
  CHECK(t.size() == 148);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i - 1].rgb <= t[i].rgb);
  CHECK(t.contains("Golden Brown"));
  CHECK(t[0].name == "Black");
  bool found = false;
  for (const auto& e : t.entries())
    if (e.name == "Golden Brown") found = e.rgb == std::array<std::uint8_t, 3>{153, 101, 21};
  CHECK(found);
}

TEST_CASE("color table parsing rejects bad input") {
  CHECK_THROWS(ColorTable::parse("# fnv1a64 0000000000000000\nname,r,g,b\nRed,255,0,0\n"));
  CHECK_THROWS(ColorTable::parse("colour,r,g,b\nRed,255,0,0\n"));
  CHECK_THROWS(ColorTable::parse("name,r,g,b\nRed,256,0,0\n"));
  CHECK_THROWS(ColorTable::parse("name,r,g,b\nRed,255,0,0\nRed,254,0,0\n"));
  const auto t = ColorTable::parse("name,r,g,b\nZ,9,0,0\nA,1,0,0\nM,1,0,0\n");
  CHECK(t[0].name == "A");
  CHECK(t[1].name == "M");
  CHECK(t[2].name == "Z");
}

TEST_CASE("subnet mapping: worked example and corner") {
  CHECK(map_subnet(Subnet24::parse("153.101.21.0/24"), shipped()).name == "Golden Brown");
  CHECK(map_subnet(Subnet24::parse("0.0.0.0/24"), shipped()).name == "Black");
  CHECK_THROWS(Subnet24::parse("10.0.0.0/16"));
  CHECK(Subnet24::of(parse_ipv4("10.1.2.3")).str() == "10.1.2.0/24");
}

TEST_CASE("subnet mapping matches an exhaustive scan") {
  std::mt19937_64 rng(42);
  const auto& t = shipped();
  for (int i = 0; i < 20; ++i) {
    const auto addr = static_cast<std::uint32_t>(rng());
    const int o[3] = {static_cast<int>(addr >> 24), static_cast<int>((addr >> 16) & 255), static_cast<int>((addr >> 8) & 255)};
    std::size_t best = 0;
    int best_d = 1 << 30;
    for (std::size_t k = 0; k < t.size(); ++k) {
      int d = 0;
      for (int c = 0; c < 3; ++c) d += (o[c] - t[k].rgb[static_cast<std::size_t>(c)]) * (o[c] - t[k].rgb[static_cast<std::size_t>(c)]);
      if (d < best_d) best = k, best_d = d;
    }
    CHECK(map_subnet(Subnet24::of(addr), t).name == t[best].name);
  }
}

TEST_CASE("subnet mapping is stable under small perturbations") {
  // Perturbing the prefix by less than half the gap to the runner-up keeps the answer.
  std::mt19937_64 rng(9);
  const auto& t = shipped();
  for (int i = 0; i < 30; ++i) {
    const int o[3] = {static_cast<int>(rng() % 256), static_cast<int>(rng() % 256), static_cast<int>(rng() % 256)};
    std::vector<double> d;
    for (const auto& e : t.entries()) {
      double s = 0;
      for (int c = 0; c < 3; ++c) s += std::pow(o[c] - e.rgb[static_cast<std::size_t>(c)], 2);
      d.push_back(std::sqrt(s));
    }
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const double margin = (sorted[1] - sorted[0]) / 2;
    const auto base = map_subnet(Subnet24{static_cast<std::uint32_t>((o[0] << 24) | (o[1] << 16) | (o[2] << 8))}, t).name;
    for (int dc = 0; dc < 3; ++dc)
      for (int sign : {-1, 1}) {
        int p[3] = {o[0], o[1], o[2]};
        p[dc] += sign;
        if (p[dc] < 0 || p[dc] > 255 || margin <= 1.0) continue;
        const auto moved = Subnet24{static_cast<std::uint32_t>((p[0] << 24) | (p[1] << 16) | (p[2] << 8))};
        CHECK(map_subnet(moved, t).name == base);
      }
  }
}

TEST_CASE("evenly spaced category mapping") {
  const auto& t = shipped();
  CHECK(&map_category(0, 3, t) == &t[0]);
  CHECK(&map_category(0, 7, t) == &t[0]);
  CHECK(&map_category(1, 3, t) == &t[49]);
  CHECK(&map_category(2, 3, t) == &t[98]);
  CHECK_THROWS_AS(map_category(3, 3, t), std::out_of_range);
  for (std::size_t n : {1u, 2u, 3u, 17u, 100u, 148u}) {
    std::set<std::string> names;
    for (std::size_t j = 0; j < n; ++j) names.insert(map_category(j, n, t).name);
    CHECK(names.size() == n);
  }
}

TEST_CASE("training prompts") {
  const auto cat = small_catalog();
  const auto& t = shipped();
  const auto tcp = training_prompt(View::Protocol, 0, cat, t);
  CHECK(tcp.text == "network traffic image, protocol is " + t[0].name + " style");
  CHECK(tcp.phase == PromptPhase::Train);
  CHECK(tcp.categories.size() == 1);

  const auto subnet = training_prompt(View::Subnet, 1, cat, t);
  CHECK(subnet.text == "network traffic image, subnet is Golden Brown style");

  for (View v : kViews)
    for (std::size_t j = 0; j < cat.categories(v).size(); ++j) {
      const auto spec = training_prompt(v, j, cat, t);
      CHECK(count_color_names(spec.text, t) == 1);
      CHECK(spec.categories.size() == 1);
    }
}

TEST_CASE("generation prompts") {
  const auto cat = small_catalog();
  const auto& t = shipped();
  for (View v : kViews)
    for (std::size_t j = 0; j < cat.categories(v).size(); ++j)
      CHECK(generation_prompt({{v, j}}, cat, t).text == training_prompt(v, j, cat, t).text);

  const auto multi = generation_prompt({{View::AttackType, 1}, {View::Subnet, 1}, {View::Protocol, 0}}, cat, t);
  const std::string expected = "network traffic image, protocol is " + map_category(0, 3, t).name +
                               " style, subnet is Golden Brown style, attack type is " + map_category(1, 3, t).name +
                               " style";
  CHECK(multi.text == expected);
  CHECK(multi.phase == PromptPhase::Generate);
  REQUIRE(multi.categories.size() == 3);
  CHECK(multi.categories[2].second == "syn-flood");

  CHECK_THROWS(generation_prompt({}, cat, t));
  CHECK_THROWS(generation_prompt({{View::Protocol, 0}, {View::Protocol, 1}}, cat, t));
}

TEST_CASE("templates are configurable and checked") {
  auto tpl = PromptTemplates::from_json(R"({"global": "pkt", "templates": {"protocol": "proto {color}"}})");
  CHECK(tpl.global == "pkt");
  CHECK(tpl.views[0] == "proto {color}");
  CHECK(tpl.views[1] == "subnet is {color} style");
  CHECK(PromptTemplates::from_json(tpl.to_json()).views == tpl.views);
  CHECK_THROWS(PromptTemplates::from_json(R"({"templates": {"protocol": "no slot"}})"));
  CHECK_THROWS(PromptTemplates::from_json(R"({"templates": {"protocol": "{color} {color}"}})"));
}

TEST_CASE("catalog from a dataset") {
  TraceDataset ds;
  auto a = make_tcp(1, parse_ipv4("10.0.0.9"), 1, 2, TcpHeader::kSYN);
  a.label = "syn-flood";
  auto b = make_udp(1, parse_ipv4("9.9.9.9"), 1, 2, 0);
  ds.packets = {a, b};
  const auto cat = ViewCatalog::from_dataset(ds);
  CHECK(cat.categories(View::Protocol) == std::vector<std::string>{"TCP", "UDP", "ICMP"});
  CHECK(cat.categories(View::Subnet) == std::vector<std::string>{"9.9.9.0/24", "10.0.0.0/24"});
  CHECK(cat.categories(View::AttackType) == std::vector<std::string>{"benign", "syn-flood"});
  CHECK(cat.index_of(View::AttackType, "syn-flood") == 1);
  CHECK_THROWS(cat.index_of(View::AttackType, "nope"));
}
