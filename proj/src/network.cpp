#include "stap/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stap {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file: " + path);
  out << content;
  if (!out) throw input_error("write failed: " + path);
}

namespace {

// Strips "~" comments, normalizes line endings, splits into lines.
std::vector<std::string> clean_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\r') continue;
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  for (auto& line : lines) {
    auto tilde = line.find('~');
    if (tilde != std::string::npos) line.erase(tilde);
  }
  return lines;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Metadata line "<TAG> value"; returns tag and the remainder.
bool parse_tag_line(const std::string& line, std::string& tag, std::string& value) {
  auto open = line.find('<');
  if (open == std::string::npos) return false;
  auto close = line.find('>', open);
  if (close == std::string::npos) return false;
  tag = line.substr(open + 1, close - open - 1);
  value = line.substr(close + 1);
  return true;
}

double parse_number(const std::string& token, const std::string& context) {
  try {
    size_t pos = 0;
    double v = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw input_error("malformed numeric token '" + token + "' in " + context);
  }
}

long parse_integer(const std::string& value, const std::string& tag) {
  std::istringstream ss(value);
  long v = 0;
  if (!(ss >> v)) throw input_error("metadata tag <" + tag + "> has no integer value");
  return v;
}

void warn(WarningList* warnings, const std::string& msg) {
  if (warnings) warnings->push_back(msg);
}

}  // namespace

const std::vector<std::vector<int>>& Network::out_links() const {
  build_adjacency();
  return out_links_;
}

const std::vector<std::vector<int>>& Network::in_links() const {
  build_adjacency();
  return in_links_;
}

void Network::build_adjacency() const {
  if (adjacency_built_) return;
  out_links_.assign(num_nodes, {});
  in_links_.assign(num_nodes, {});
  for (int a = 0; a < num_links(); ++a) {
    out_links_[links[a].tail].push_back(a);
    in_links_[links[a].head].push_back(a);
  }
  adjacency_built_ = true;
}

Network parse_network(const std::string& text, WarningList* warnings) {
  auto lines = clean_lines(text);

  long nodes = -1, zones = -1, link_count = -1, first_thru = -1;
  size_t row_start = lines.size();
  bool saw_end = false;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (is_blank(line)) continue;
    std::string tag, value;
    if (!parse_tag_line(line, tag, value)) {
      // TNTP files begin with metadata; tolerate data before END OF METADATA
      // only if it looks like a stray header.
      throw input_error("unexpected content before <END OF METADATA>: '" + line + "'");
    }
    if (tag == "NUMBER OF NODES") nodes = parse_integer(value, tag);
    else if (tag == "NUMBER OF ZONES") zones = parse_integer(value, tag);
    else if (tag == "NUMBER OF LINKS") link_count = parse_integer(value, tag);
    else if (tag == "FIRST THRU NODE") first_thru = parse_integer(value, tag);
    else if (tag == "END OF METADATA") {
      saw_end = true;
      row_start = i + 1;
      break;
    } else {
      warn(warnings, "unknown metadata tag <" + tag + "> ignored");
    }
  }
  if (!saw_end) throw input_error("missing <END OF METADATA> tag");
  if (nodes < 0) throw input_error("missing <NUMBER OF NODES> tag");
  if (link_count < 0) throw input_error("missing <NUMBER OF LINKS> tag");
  if (zones < 0) {
    zones = nodes;
    warn(warnings, "missing <NUMBER OF ZONES>; defaulting to number of nodes");
  }
  if (first_thru < 0) {
    first_thru = 1;
    warn(warnings, "missing <FIRST THRU NODE>; defaulting to 1");
  }
  if (zones > nodes) throw input_error("zone count exceeds node count");

  Network net;
  net.num_nodes = static_cast<int>(nodes);
  net.num_zones = static_cast<int>(zones);
  net.first_thru_node = static_cast<int>(first_thru - 1);  // to 0-based

  std::vector<std::string> fields;
  for (size_t i = row_start; i < lines.size(); ++i) {
    std::string line = lines[i];
    std::replace(line.begin(), line.end(), ';', ' ');
    if (is_blank(line)) continue;
    fields.clear();
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    if (fields.size() < 10)
      throw input_error("link row with fewer than 10 numeric fields: '" + lines[i] + "'");
    if (fields.size() > 10)
      warn(warnings, "link row has extra fields, ignored: '" + lines[i] + "'");
    const std::string ctx = "link row " + std::to_string(net.links.size() + 1);
    Link link;
    long tail = static_cast<long>(parse_number(fields[0], ctx));
    long head = static_cast<long>(parse_number(fields[1], ctx));
    if (tail < 1 || tail > nodes || head < 1 || head > nodes)
      throw input_error(ctx + ": node index out of range [1, " + std::to_string(nodes) + "]");
    link.tail = static_cast<int>(tail - 1);
    link.head = static_cast<int>(head - 1);
    link.capacity = parse_number(fields[2], ctx);
    link.length = parse_number(fields[3], ctx);
    link.free_flow_time = parse_number(fields[4], ctx);
    link.bpr_b = parse_number(fields[5], ctx);
    link.bpr_power = parse_number(fields[6], ctx);
    link.speed_limit = parse_number(fields[7], ctx);
    link.toll = parse_number(fields[8], ctx);
    link.link_type = parse_number(fields[9], ctx);
    if (!(link.capacity > 0)) throw input_error(ctx + ": non-positive capacity");
    link.centroid_connector = link.tail < net.first_thru_node || link.head < net.first_thru_node;
    net.links.push_back(link);
  }

  if (static_cast<long>(net.links.size()) != link_count)
    throw input_error("declared " + std::to_string(link_count) + " links but parsed " +
                      std::to_string(net.links.size()));

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(net.links.size());
  for (const auto& l : net.links) pairs.emplace_back(l.tail, l.head);
  std::sort(pairs.begin(), pairs.end());
  if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end())
    warn(warnings, "network contains parallel links (duplicate tail-head pairs)");

  return net;
}

double OdMatrix::total() const {
  double s = 0;
  for (const auto& row : rows)
    for (const auto& [dest, d] : row) s += d;
  return s;
}

double OdMatrix::demand(int origin, int dest) const {
  if (origin < 0 || origin >= static_cast<int>(rows.size())) return 0;
  for (const auto& [d, v] : rows[origin])
    if (d == dest) return v;
  return 0;
}

void OdMatrix::add(int origin, int dest, double trips) {
  if (origin >= static_cast<int>(rows.size())) rows.resize(origin + 1);
  rows[origin].emplace_back(dest, trips);
}

void OdMatrix::sort_rows() {
  for (auto& row : rows) std::sort(row.begin(), row.end());
}

OdMatrix parse_trips(const std::string& text, WarningList* warnings) {
  auto lines = clean_lines(text);

  long zones = -1;
  double declared_total = -1;
  size_t row_start = 0;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (is_blank(line)) continue;
    std::string tag, value;
    if (!parse_tag_line(line, tag, value)) {
      row_start = i;  // first Origin block
      break;
    }
    if (tag == "NUMBER OF ZONES") zones = parse_integer(value, tag);
    else if (tag == "TOTAL OD FLOW") declared_total = parse_number(value, "<TOTAL OD FLOW>");
    else if (tag == "END OF METADATA") {
      row_start = i + 1;
      break;
    } else {
      warn(warnings, "unknown metadata tag <" + tag + "> ignored");
    }
  }

  OdMatrix od;
  int origin = -1;
  // Entries "dest : value ;" possibly several per line.
  for (size_t i = row_start; i < lines.size(); ++i) {
    std::istringstream ss(lines[i]);
    std::string tok;
    while (ss >> tok) {
      if (tok == "Origin") {
        if (!(ss >> tok)) throw input_error("Origin header without a zone number");
        long o = static_cast<long>(parse_number(tok, "Origin header"));
        if (o < 1) throw input_error("origin zone index must be >= 1");
        origin = static_cast<int>(o - 1);
        continue;
      }
      if (origin < 0) throw input_error("demand entry before any Origin header");
      // tok is the destination; expect ':' then value, with flexible spacing.
      std::string dest_tok = tok;
      auto colon = dest_tok.find(':');
      std::string value_tok;
      if (colon != std::string::npos) {
        value_tok = dest_tok.substr(colon + 1);
        dest_tok.erase(colon);
      } else {
        if (!(ss >> tok)) throw input_error("demand entry missing ':' separator");
        if (tok[0] != ':') throw input_error("malformed demand entry near '" + dest_tok + "'");
        value_tok = tok.substr(1);
      }
      if (dest_tok.empty()) throw input_error("demand entry missing destination index");
      if (value_tok.empty()) {
        if (!(ss >> value_tok)) throw input_error("demand entry missing value");
      }
      while (!value_tok.empty() && value_tok.back() == ';') value_tok.pop_back();
      if (value_tok.empty()) {
        // value and ';' were separated by spaces: read value, then expect ';'
        if (!(ss >> value_tok)) throw input_error("demand entry missing value");
        while (!value_tok.empty() && value_tok.back() == ';') value_tok.pop_back();
      }
      long dest = static_cast<long>(parse_number(dest_tok, "destination index"));
      double v = parse_number(value_tok, "demand value");
      if (dest < 1) throw input_error("destination zone index must be >= 1");
      if (v < 0) throw input_error("negative demand entry");
      if (v > 0) od.add(origin, static_cast<int>(dest - 1), v);
    }
  }
  od.sort_rows();

  int max_zone = static_cast<int>(od.rows.size());
  for (const auto& row : od.rows)
    for (const auto& [dest, v] : row) max_zone = std::max(max_zone, dest + 1);
  od.num_zones = zones > 0 ? static_cast<int>(zones) : max_zone;
  if (max_zone > od.num_zones)
    throw input_error("demand references zone " + std::to_string(max_zone) +
                      " beyond declared zone count " + std::to_string(od.num_zones));
  if (static_cast<int>(od.rows.size()) < od.num_zones) od.rows.resize(od.num_zones);

  if (declared_total >= 0) {
    double actual = od.total();
    double scale = std::max(1.0, std::abs(declared_total));
    if (std::abs(actual - declared_total) > 1e-6 * scale)
      warn(warnings, "declared total OD flow " + format_g17(declared_total) +
                         " differs from sum of entries " + format_g17(actual));
  }
  return od;
}

std::string write_network_tntp(const Network& net) {
  std::ostringstream out;
  out << "<NUMBER OF ZONES> " << net.num_zones << "\n";
  out << "<NUMBER OF NODES> " << net.num_nodes << "\n";
  out << "<FIRST THRU NODE> " << net.first_thru_node + 1 << "\n";
  out << "<NUMBER OF LINKS> " << net.num_links() << "\n";
  out << "<END OF METADATA>\n\n";
  out << "~ \ttail\thead\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\ttype\t;\n";
  for (const auto& l : net.links) {
    out << '\t' << l.tail + 1 << '\t' << l.head + 1 << '\t' << format_g17(l.capacity) << '\t'
        << format_g17(l.length) << '\t' << format_g17(l.free_flow_time) << '\t'
        << format_g17(l.bpr_b) << '\t' << format_g17(l.bpr_power) << '\t'
        << format_g17(l.speed_limit) << '\t' << format_g17(l.toll) << '\t'
        << format_g17(l.link_type) << "\t;\n";
  }
  return out.str();
}

std::string write_trips_tntp(const OdMatrix& od) {
  std::ostringstream out;
  out << "<NUMBER OF ZONES> " << od.num_zones << "\n";
  out << "<TOTAL OD FLOW> " << format_g17(od.total()) << "\n";
  out << "<END OF METADATA>\n\n";
  for (int origin = 0; origin < static_cast<int>(od.rows.size()); ++origin) {
    if (od.rows[origin].empty()) continue;
    out << "Origin " << origin + 1 << "\n";
    int per_line = 0;
    for (const auto& [dest, v] : od.rows[origin]) {
      out << "   " << dest + 1 << " : " << format_g17(v) << "; ";
      if (++per_line % 4 == 0) out << "\n";
    }
    if (per_line % 4 != 0) out << "\n";
  }
  return out.str();
}

Network load_network_file(const std::string& path, WarningList* warnings) {
  return parse_network(read_text_file(path), warnings);
}

OdMatrix load_trips_file(const std::string& path, WarningList* warnings) {
  return parse_trips(read_text_file(path), warnings);
}

}  // namespace stap
