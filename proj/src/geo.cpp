#include "dosematch/geo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "dosematch/csv.hpp"
#include "dosematch/errors.hpp"
#include "dosematch/io.hpp"
#include "json.hpp"

namespace dosematch::geo {

using nlohmann::json;

double signed_area(const Ring& ring) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    a += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  }
  return 0.5 * a;
}

double NeighbourhoodPolygon::area() const {
  double total = 0.0;
  for (const auto& part : parts) {
    for (std::size_t r = 0; r < part.rings.size(); ++r) {
      const double a = std::abs(signed_area(part.rings[r]));
      total += r == 0 ? a : -a;
    }
  }
  return total;
}

namespace {

bool on_segment(Point p, Point a, Point b) {
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  const double scale = std::max({std::abs(b.lon - a.lon), std::abs(b.lat - a.lat), 1e-300});
  if (std::abs(cross) > 1e-12 * scale * std::max(1.0, scale)) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
         p.lat <= std::max(a.lat, b.lat);
}

bool part_contains(const PolygonPart& part, Point p) {
  bool inside = false;
  for (const auto& ring : part.rings) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const Point a = ring[i];
      const Point b = ring[i + 1];
      if (on_segment(p, a, b)) return true;
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
        if (p.lon < x) inside = !inside;
      }
    }
  }
  return inside;
}

}  // namespace

bool NeighbourhoodPolygon::contains(Point p) const {
  return std::any_of(parts.begin(), parts.end(), [&](const PolygonPart& part) { return part_contains(part, p); });
}

std::optional<std::string> assign_point(double lon, double lat, const std::vector<NeighbourhoodPolygon>& polygons) {
  const Point p{lon, lat};
  for (const auto& poly : polygons) {
    if (poly.contains(p)) return poly.id;
  }
  return std::nullopt;
}

namespace {

Ring parse_ring(const json& coords, const std::string& where) {
  if (!coords.is_array()) throw ParseError(where + ": ring is not an array");
  Ring ring;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      throw ParseError(where + ": malformed coordinate");
    }
    const Point p{c[0].get<double>(), c[1].get<double>()};
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat) || p.lon < -180.0 || p.lon > 180.0 || p.lat < -90.0 ||
        p.lat > 90.0) {
      throw ValidationError(where + ": coordinate out of range");
    }
    ring.push_back(p);
  }
  if (ring.size() < 4) throw ValidationError(where + ": ring has fewer than 4 points");
  if (!(ring.front() == ring.back())) throw ValidationError(where + ": unclosed ring");
  return ring;
}

PolygonPart parse_polygon(const json& rings, const std::string& where) {
  if (!rings.is_array() || rings.empty()) throw ParseError(where + ": polygon without rings");
  PolygonPart part;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    Ring ring = parse_ring(rings[r], where);
    const bool ccw = signed_area(ring) > 0.0;
    // Outer counter-clockwise, holes clockwise.
    if ((r == 0) != ccw) std::reverse(ring.begin(), ring.end());
    part.rings.push_back(std::move(ring));
  }
  return part;
}

std::string feature_id(const json& feature, const std::string& id_property, std::size_t index) {
  const json* raw = nullptr;
  if (feature.contains("properties") && feature["properties"].is_object() &&
      feature["properties"].contains(id_property)) {
    raw = &feature["properties"][id_property];
  } else if (feature.contains("id")) {
    raw = &feature["id"];
  }
  if (raw == nullptr) throw SchemaError("feature " + std::to_string(index) + ": missing '" + id_property + "'");
  if (raw->is_string()) return raw->get<std::string>();
  if (raw->is_number_integer()) return std::to_string(raw->get<long long>());
  throw SchemaError("feature " + std::to_string(index) + ": id is neither string nor integer");
}

}  // namespace

std::vector<NeighbourhoodPolygon> parse_boundaries(const std::string& geojson_text, const std::string& id_property,
                                                   const std::string& source) {
  json doc;
  try {
    doc = json::parse(geojson_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") || !doc["features"].is_array()) {
    throw SchemaError(source + ": not a GeoJSON FeatureCollection");
  }
  std::vector<NeighbourhoodPolygon> out;
  const auto& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (!f.is_object()) throw SchemaError(source + ": feature " + std::to_string(i) + " is not an object");
    NeighbourhoodPolygon poly;
    poly.id = feature_id(f, id_property, i);
    const std::string where = source + ": feature '" + poly.id + "'";
    if (!f.contains("geometry") || !f["geometry"].is_object()) throw SchemaError(where + ": missing geometry");
    const auto& g = f["geometry"];
    const std::string type = g.value("type", "");
    try {
      if (type == "Polygon") {
        poly.parts.push_back(parse_polygon(g.at("coordinates"), where));
      } else if (type == "MultiPolygon") {
        for (const auto& p : g.at("coordinates")) poly.parts.push_back(parse_polygon(p, where));
        if (poly.parts.empty()) throw ParseError(where + ": empty MultiPolygon");
      } else {
        throw SchemaError(where + ": unsupported geometry type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    out.push_back(std::move(poly));
  }
  return out;
}

std::vector<NeighbourhoodPolygon> load_boundaries(const std::string& path, const std::string& id_property) {
  return parse_boundaries(read_text_file(path), id_property, path);
}

Date Date::parse(const std::string& text) {
  Date d;
  char dash1 = 0, dash2 = 0;
  int consumed = 0;
  if (text.size() != 10 ||
      std::sscanf(text.c_str(), "%4d%c%2d%c%2d%n", &d.year, &dash1, &d.month, &dash2, &d.day, &consumed) != 5 ||
      consumed != 10 || dash1 != '-' || dash2 != '-') {
    throw ParseError("bad date '" + text + "' (expected YYYY-MM-DD)");
  }
  static constexpr int kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > kDays[d.month - 1] || (d.month == 2 && d.day == 29 && !leap)) {
    throw ParseError("invalid calendar date '" + text + "'");
  }
  return d;
}

std::string normalize_name(const std::string& name) {
  std::size_t b = 0;
  std::size_t e = name.size();
  while (b < e && std::isspace(static_cast<unsigned char>(name[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(name[e - 1]))) --e;
  std::string out = name.substr(b, e - b);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool label_anchor(const Venue& venue, const std::set<std::string>& brand_names) {
  return venue.category_l1 == kAnchorCategory && brand_names.count(normalize_name(venue.name)) > 0;
}

bool is_restaurant(const Venue& venue, const std::set<std::string>& brand_names) {
  return venue.category_l2.find("Restaurant") != std::string::npos && brand_names.count(normalize_name(venue.name)) == 0;
}

std::vector<Venue> load_venues(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  const auto c_id = t.require("id");
  const auto c_name = t.require("name");
  const auto c_lon = t.require("lon");
  const auto c_lat = t.require("lat");
  const auto c_l1 = t.require("category_l1");
  const auto c_l2 = t.require("category_l2");
  const auto c_created = t.require("created");
  std::vector<Venue> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Venue v;
    v.id = row[c_id];
    v.name = row[c_name];
    v.lon = csv::parse_double(row[c_lon], r + 1, "lon", path);
    v.lat = csv::parse_double(row[c_lat], r + 1, "lat", path);
    if (v.lon < -180.0 || v.lon > 180.0 || v.lat < -90.0 || v.lat > 90.0) {
      throw ValidationError(path + ": row " + std::to_string(r + 1) + ": coordinate out of range");
    }
    v.category_l1 = row[c_l1];
    v.category_l2 = row[c_l2];
    try {
      v.created = Date::parse(row[c_created]);
    } catch (const ParseError& e) {
      throw ParseError(path + ": row " + std::to_string(r + 1) + ", column 'created': " + e.what());
    }
    if (v.id.empty()) throw ValidationError(path + ": row " + std::to_string(r + 1) + ": empty venue id");
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Tip> load_tips(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  const auto c_venue = t.require("venue_id");
  const auto c_date = t.require("date");
  std::vector<Tip> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Tip tip;
    tip.venue_id = t.rows[r][c_venue];
    if (tip.venue_id.empty()) throw ValidationError(path + ": row " + std::to_string(r + 1) + ": empty venue_id");
    try {
      tip.date = Date::parse(t.rows[r][c_date]);
    } catch (const ParseError& e) {
      throw ParseError(path + ": row " + std::to_string(r + 1) + ", column 'date': " + e.what());
    }
    out.push_back(std::move(tip));
  }
  return out;
}

std::set<std::string> parse_brands(const std::string& text) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string name = normalize_name(text.substr(start, end - start));
    if (!name.empty() && name[0] != '#') out.insert(name);
    start = end + 1;
  }
  return out;
}

std::set<std::string> load_brands(const std::string& path) { return parse_brands(read_text_file(path)); }

Census parse_census(const std::string& text, const std::string& key_column, const std::string& source) {
  const csv::Table t = csv::parse(text, source);
  const auto key = t.require(key_column);
  Census c;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i == key) continue;
    cols.push_back(i);
    c.confounder_names.push_back(t.header[i]);
  }
  if (cols.empty()) throw SchemaError(source + ": census has no confounder columns");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<double> values;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      values.push_back(csv::parse_double(t.rows[r][cols[k]], r + 1, c.confounder_names[k], source));
    }
    if (!c.rows.emplace(t.rows[r][key], std::move(values)).second) {
      throw ValidationError(source + ": duplicate census id '" + t.rows[r][key] + "'");
    }
  }
  return c;
}

Census load_census(const std::string& path, const std::string& key_column) {
  return parse_census(read_text_file(path), key_column, path);
}

CategoryCounts load_category_counts(const std::string& json_path) {
  const json j = json::parse(read_text_file(json_path));
  CategoryCounts out;
  for (const auto& [name, cats] : j.items()) out[name] = cats.get<std::set<std::string>>();
  return out;
}

IngestResult build_unit_table(const std::vector<Venue>& venues, const std::vector<Tip>& tips,
                              const std::vector<NeighbourhoodPolygon>& polygons, const Census& census,
                              const std::set<std::string>& brand_names, int year,
                              const CategoryCounts& category_counts) {
  const Date start{year, 1, 1};
  const Date next{year + 1, 1, 1};

  struct Counts {
    double anchors = 0;
    double restaurants = 0;
    double tips = 0;
    std::vector<double> extra;
  };
  std::map<std::string, Counts> per_hood;
  for (const auto& p : polygons) per_hood[p.id].extra.assign(category_counts.size(), 0.0);

  std::unordered_map<std::string, std::string> restaurant_hood;  // venue id -> neighbourhood
  std::size_t unassigned = 0;
  for (const auto& v : venues) {
    const auto hood = assign_point(v.lon, v.lat, polygons);
    if (!hood) {
      ++unassigned;
      continue;
    }
    if (!(v.created < start)) continue;
    Counts& c = per_hood[*hood];
    if (label_anchor(v, brand_names)) c.anchors += 1;
    if (is_restaurant(v, brand_names)) {
      c.restaurants += 1;
      restaurant_hood.emplace(v.id, *hood);
    }
    std::size_t k = 0;
    for (const auto& [name, cats] : category_counts) {
      if (cats.count(v.category_l1) || cats.count(v.category_l2)) c.extra[k] += 1;
      ++k;
    }
  }
  for (const auto& t : tips) {
    if (t.date < start || !(t.date < next)) continue;
    auto it = restaurant_hood.find(t.venue_id);
    if (it != restaurant_hood.end()) per_hood[it->second].tips += 1;
  }

  std::vector<std::string> names = census.confounder_names;
  for (const auto& [name, cats] : category_counts) names.push_back(name);

  std::vector<Unit> units;
  std::vector<std::string> dropped;
  for (const auto& [id, c] : per_hood) {
    if (c.restaurants == 0) {
      dropped.push_back(id);
      continue;
    }
    auto row = census.rows.find(id);
    if (row == census.rows.end()) throw ValidationError("census row missing for neighbourhood '" + id + "'");
    Unit u;
    u.id = id;
    u.confounders = row->second;
    u.confounders.insert(u.confounders.end(), c.extra.begin(), c.extra.end());
    u.treatment = c.anchors / c.restaurants;
    u.outcome = c.tips / c.restaurants;
    units.push_back(std::move(u));
  }
  if (units.empty()) throw ValidationError("no neighbourhood has any restaurant before " + std::to_string(year));
  return {UnitTable(std::move(units), std::move(names)), std::move(dropped), unassigned};
}

}  // namespace dosematch::geo
