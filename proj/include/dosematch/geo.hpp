#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dosematch/dataset.hpp"

namespace dosematch::geo {

struct Point {
  double lon = 0.0;
  double lat = 0.0;

  bool operator==(const Point&) const = default;
};

/// Closed ring: first point repeated as the last.
using Ring = std::vector<Point>;

/// One polygon of a (multi)polygon: outer ring first, holes after.
struct PolygonPart {
  std::vector<Ring> rings;
};

struct NeighbourhoodPolygon {
  std::string id;
  std::vector<PolygonPart> parts;

  /// Planar area in squared degrees (outer rings minus holes).
  double area() const;
  bool contains(Point p) const;
};

/// Signed shoelace area; positive for counter-clockwise rings.
double signed_area(const Ring& ring);

/// Parses a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
/// The neighbourhood id is read from `properties[id_property]`, falling back
/// to the feature-level "id". Outer rings are normalized counter-clockwise
/// and holes clockwise.
std::vector<NeighbourhoodPolygon> parse_boundaries(const std::string& geojson_text,
                                                   const std::string& id_property = "id",
                                                   const std::string& source = "<memory>");
std::vector<NeighbourhoodPolygon> load_boundaries(const std::string& path, const std::string& id_property = "id");

/// Id of the first polygon (input order) that contains the point by even-odd
/// ray casting. Points on a ring boundary count as contained, so a point on a
/// shared edge goes to the earlier polygon.
std::optional<std::string> assign_point(double lon, double lat, const std::vector<NeighbourhoodPolygon>& polygons);

/// Calendar date (proleptic Gregorian), parsed from YYYY-MM-DD.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;
  static Date parse(const std::string& text);
};

struct Venue {
  std::string id;
  std::string name;
  double lon = 0.0;
  double lat = 0.0;
  std::string category_l1;
  std::string category_l2;
  Date created;
};

struct Tip {
  std::string venue_id;
  Date date;
};

/// Casefolded (ASCII) and trimmed.
std::string normalize_name(const std::string& name);

inline constexpr const char* kAnchorCategory = "Shop & Service";

/// Normalized venue name is a listed brand and the first-level category is
/// "Shop & Service". `brand_names` must already be normalized.
bool label_anchor(const Venue& venue, const std::set<std::string>& brand_names);

/// Branded names never count as restaurants even outside "Shop & Service".
bool is_restaurant(const Venue& venue, const std::set<std::string>& brand_names);

std::vector<Venue> load_venues(const std::string& path);
std::vector<Tip> load_tips(const std::string& path);
/// One brand per line; blank lines and lines starting with '#' are skipped.
std::set<std::string> load_brands(const std::string& path);
std::set<std::string> parse_brands(const std::string& text);

struct Census {
  std::vector<std::string> confounder_names;
  std::map<std::string, std::vector<double>> rows;  // neighbourhood id -> values
};

/// CSV keyed by `key_column`; every other column is a confounder.
Census load_census(const std::string& path, const std::string& key_column = "id");
Census parse_census(const std::string& text, const std::string& key_column = "id",
                    const std::string& source = "<memory>");

/// Extra confounders counted from venues: name -> categories (matched against
/// either category level) whose venues are counted per neighbourhood.
using CategoryCounts = std::map<std::string, std::set<std::string>>;
CategoryCounts load_category_counts(const std::string& json_path);

struct IngestResult {
  UnitTable table;
  std::vector<std::string> dropped;     // neighbourhoods with no restaurants
  std::size_t unassigned_venues = 0;    // venues outside every boundary
};

/// Per neighbourhood, counting venues created before 1 January of `year`:
///   treatment = anchors / restaurants
///   outcome   = tips dated within `year` on those restaurants / restaurants
/// Neighbourhoods without restaurants are dropped and listed. Units are
/// ordered by neighbourhood id.
IngestResult build_unit_table(const std::vector<Venue>& venues, const std::vector<Tip>& tips,
                              const std::vector<NeighbourhoodPolygon>& polygons, const Census& census,
                              const std::set<std::string>& brand_names, int year,
                              const CategoryCounts& category_counts = {});

}  // namespace dosematch::geo
