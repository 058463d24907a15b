#include "ddsynth/prompt.hpp"

#include "ddsynth/hash.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ddsynth {

ColorTable::ColorTable(std::vector<NamedColor> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("color table is empty");
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const NamedColor& a, const NamedColor& b) { return a.rgb < b.rgb; });
  std::set<std::string> names;
  for (const auto& e : entries_)
    if (!names.insert(e.name).second) throw std::invalid_argument("duplicate color name '" + e.name + "'");
}

bool ColorTable::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const NamedColor& e) { return e.name == name; });
}

ColorTable ColorTable::parse(const std::string& text) {
  std::string body = text;
  if (text.rfind("# fnv1a64 ", 0) == 0) {
    const auto eol = text.find('\n');
    const std::string expected = text.substr(10, eol - 10);
    body = text.substr(eol + 1);
    if (hex64(fnv1a64(body)) != expected)
      throw std::runtime_error("color table checksum mismatch (expected " + expected + ")");
  }
  std::istringstream in(body);
  std::string line;
  std::getline(in, line);
  if (line != "name,r,g,b") throw std::invalid_argument("color table header must be 'name,r,g,b'");
  std::vector<NamedColor> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string, 4> cells;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      auto comma = line.find(',', pos);
      if ((comma == std::string::npos) != (i == 3))
        throw std::invalid_argument("color table line " + std::to_string(line_no) + ": expected 4 cells");
      cells[i] = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma + 1;
    }
    NamedColor c{cells[0], {}};
    for (std::size_t i = 0; i < 3; ++i) {
      unsigned v = 256;
      std::from_chars(cells[i + 1].data(), cells[i + 1].data() + cells[i + 1].size(), v);
      if (v > 255) throw std::invalid_argument("color table line " + std::to_string(line_no) + ": bad channel");
      c.rgb[i] = static_cast<std::uint8_t>(v);
    }
    entries.push_back(std::move(c));
  }
  return ColorTable(std::move(entries));
}

ColorTable ColorTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open color table " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

Subnet24 Subnet24::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos || text.substr(slash + 1) != "24")
    throw std::invalid_argument("subnet '" + std::string(text) + "' is not a /24 prefix");
  return of(parse_ipv4(text.substr(0, slash)));
}

std::string Subnet24::str() const { return format_ipv4(network) + "/24"; }

const NamedColor& map_subnet(Subnet24 subnet, const ColorTable& table) {
  const std::array<int, 3> target = {static_cast<int>(subnet.network >> 24), static_cast<int>((subnet.network >> 16) & 0xff),
                                     static_cast<int>((subnet.network >> 8) & 0xff)};
  std::size_t best = 0;
  long best_d2 = -1;
  for (std::size_t i = 0; i < table.size(); ++i) {
    long d2 = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      const long d = target[c] - table[i].rgb[c];
      d2 += d * d;
    }
    if (best_d2 < 0 || d2 < best_d2) {
      best = i;
      best_d2 = d2;
    }
  }
  return table[best];
}

const NamedColor& map_category(std::size_t j, std::size_t category_count, const ColorTable& table) {
  if (j >= category_count) throw std::out_of_range("category index " + std::to_string(j) + " out of range");
  return table[j * table.size() / category_count];
}

std::string_view to_string(View v) {
  switch (v) {
    case View::Protocol: return "protocol";
    case View::Subnet: return "subnet";
    case View::AttackType: return "attack_type";
  }
  return "?";
}

View view_from_string(std::string_view name) {
  for (View v : kViews)
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown view '" + std::string(name) + "'");
}

namespace {

void check_template(const std::string& t) {
  std::size_t count = 0;
  for (auto pos = t.find("{color}"); pos != std::string::npos; pos = t.find("{color}", pos + 1)) ++count;
  if (count != 1) throw std::invalid_argument("prompt template must contain exactly one {color} slot: '" + t + "'");
}

std::string instantiate(const std::string& t, const std::string& color) {
  auto out = t;
  out.replace(out.find("{color}"), 7, color);
  return out;
}

}  // namespace

PromptTemplates PromptTemplates::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  PromptTemplates t;
  t.global = j.value("global", t.global);
  if (j.contains("templates"))
    for (View v : kViews)
      t.views[static_cast<std::size_t>(v)] = j["templates"].value(std::string(to_string(v)), t.views[static_cast<std::size_t>(v)]);
  for (const auto& v : t.views) check_template(v);
  return t;
}

std::string PromptTemplates::to_json() const {
  nlohmann::ordered_json j;
  j["global"] = global;
  for (View v : kViews) j["templates"][std::string(to_string(v))] = views[static_cast<std::size_t>(v)];
  return j.dump(2);
}

ViewCatalog::ViewCatalog(std::array<std::vector<std::string>, 3> categories, PromptTemplates templates)
    : categories_(std::move(categories)), templates_(std::move(templates)) {
  for (View v : kViews)
    if (categories_[static_cast<std::size_t>(v)].empty())
      throw std::invalid_argument("view '" + std::string(to_string(v)) + "' has no categories");
  for (const auto& t : templates_.views) check_template(t);
}

ViewCatalog ViewCatalog::from_dataset(const TraceDataset& dataset, PromptTemplates templates) {
  std::array<std::vector<std::string>, 3> cats;
  for (Protocol p : kAllProtocols) cats[0].emplace_back(to_string(p));
  std::set<Subnet24> subnets;
  for (const auto& p : dataset.packets) subnets.insert(Subnet24::of(p.ip.dst));
  for (const auto& s : subnets) cats[1].push_back(s.str());
  cats[2] = dataset.attack_catalog().labels();
  return ViewCatalog(std::move(cats), std::move(templates));
}

std::size_t ViewCatalog::index_of(View v, std::string_view category) const {
  const auto& cats = categories(v);
  auto it = std::find(cats.begin(), cats.end(), category);
  if (it == cats.end())
    throw std::out_of_range("unknown " + std::string(to_string(v)) + " category '" + std::string(category) + "'");
  return static_cast<std::size_t>(it - cats.begin());
}

const NamedColor& category_color(View view, std::size_t j, const ViewCatalog& catalog, const ColorTable& table) {
  const auto& cats = catalog.categories(view);
  if (j >= cats.size()) throw std::out_of_range("category index " + std::to_string(j) + " out of range");
  if (view == View::Subnet) return map_subnet(Subnet24::parse(cats[j]), table);
  return map_category(j, cats.size(), table);
}

std::string_view to_string(PromptPhase p) { return p == PromptPhase::Train ? "train" : "generate"; }

namespace {

std::string fragment(View view, std::size_t j, const ViewCatalog& catalog, const ColorTable& table) {
  return instantiate(catalog.templates().views[static_cast<std::size_t>(view)],
                     category_color(view, j, catalog, table).name);
}

}  // namespace

PromptSpec training_prompt(View view, std::size_t j, const ViewCatalog& catalog, const ColorTable& table) {
  PromptSpec spec;
  spec.phase = PromptPhase::Train;
  spec.text = catalog.templates().global + ", " + fragment(view, j, catalog, table);
  spec.categories.emplace_back(view, catalog.categories(view).at(j));
  return spec;
}

PromptSpec generation_prompt(std::vector<CategoryRef> selection, const ViewCatalog& catalog, const ColorTable& table) {
  if (selection.empty()) throw std::invalid_argument("generation prompt needs at least one category");
  std::stable_sort(selection.begin(), selection.end(),
                   [](const CategoryRef& a, const CategoryRef& b) { return a.view < b.view; });
  for (std::size_t i = 1; i < selection.size(); ++i)
    if (selection[i].view == selection[i - 1].view)
      throw std::invalid_argument("generation prompt selects two categories of view '" +
                                  std::string(to_string(selection[i].view)) + "'");
  PromptSpec spec;
  spec.phase = PromptPhase::Generate;
  spec.text = catalog.templates().global;
  for (const auto& ref : selection) {
    spec.text += ", " + fragment(ref.view, ref.index, catalog, table);
    spec.categories.emplace_back(ref.view, catalog.categories(ref.view).at(ref.index));
  }
  return spec;
}

}  // namespace ddsynth
