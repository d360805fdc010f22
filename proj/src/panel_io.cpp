// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "shroudlab/datagen.hpp"
#include "shroudlab/error.hpp"

namespace shroudlab::datagen {

namespace {

constexpr std::array<std::string_view, 13> kColumns = {
    "agency_id", "event_id", "week",          "quarter",      "league_id",
    "sport",     "n_outcomes", "treated",     "post",         "policy",
    "policy_active", "posted_price", "effective_price"};
constexpr std::string_view kProbColumn = "true_probabilities";

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

template <class Int>
void append_int(std::string& out, Int v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

void append_row(std::string& out, const PanelRow& r, bool with_probabilities) {
    out += r.agency_id;
    out += ',';
    append_int(out, r.event_id);
    out += ',';
    append_int(out, r.week);
    out += ',';
    append_int(out, r.quarter);
    out += ',';
    out += r.league_id;
    out += ',';
    out += to_string(r.sport);
    out += ',';
    append_int(out, r.n_outcomes);
    out += r.treated ? ",1," : ",0,";
    out += r.post ? "1," : "0,";
    out += odds::to_string(r.policy);
    out += r.policy_active ? ",1," : ",0,";
    append_double(out, r.posted_price);
    out += ',';
    append_double(out, r.effective_price);
    if (with_probabilities) {
        out += ',';
        for (std::size_t s = 0; s < r.true_probabilities.size(); ++s) {
            if (s) out += ';';
            append_double(out, r.true_probabilities[s]);
        }
    }
    out += '\n';
}

std::string header(bool with_probabilities) {
    std::string h;
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
        if (i) h += ',';
        h += kColumns[i];
    }
    if (with_probabilities) {
        h += ',';
        h += kProbColumn;
    }
    h += '\n';
    return h;
}

template <class T>
T parse_number(std::string_view field, std::string_view column, long line) {
    T value{};
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw SchemaError("column '" + std::string(column) + "': cannot parse '" +
                              std::string(field) + "'",
                          line);
    }
    return value;
}

bool parse_flag(std::string_view field, std::string_view column, long line) {
    if (field == "1") return true;
    if (field == "0") return false;
    throw SchemaError("column '" + std::string(column) + "': expected 0 or 1, got '" +
                          std::string(field) + "'",
                      line);
}

void split(std::string_view line, std::vector<std::string_view>& fields) {
    fields.clear();
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

void write_panel(std::ostream& out, const std::vector<PanelRow>& rows, bool with_probabilities) {
    std::string buf = header(with_probabilities);
    buf.reserve(1 << 20);
    for (const auto& r : rows) {
        append_row(buf, r, with_probabilities);
        if (buf.size() > (1u << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_panel(const std::string& path, const std::vector<PanelRow>& rows, bool with_probabilities) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    write_panel(out, rows, with_probabilities);
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

std::vector<PanelRow> read_panel_text(std::string_view text) {
    std::vector<PanelRow> rows;
    std::vector<std::string_view> fields;
    long line_no = 0;
    std::size_t pos = 0;

    const auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line)) throw SchemaError("empty panel file: missing header");
    split(line, fields);
    std::array<std::size_t, kColumns.size()> index{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find(fields.begin(), fields.end(), kColumns[c]);
        if (it == fields.end()) {
            throw SchemaError("missing required column '" + std::string(kColumns[c]) + "'", 1);
        }
        index[c] = static_cast<std::size_t>(it - fields.begin());
    }
    const auto prob_it = std::find(fields.begin(), fields.end(), kProbColumn);
    const bool has_probs = prob_it != fields.end();
    const auto prob_index = static_cast<std::size_t>(prob_it - fields.begin());
    const std::size_t width = fields.size();

    rows.reserve(text.size() / 80);
    while (next_line(line)) {
        if (line.empty()) continue;
        split(line, fields);
        if (fields.size() != width) {
            throw SchemaError("expected " + std::to_string(width) + " fields, found " +
                                  std::to_string(fields.size()),
                              line_no);
        }
        const auto f = [&](std::size_t c) { return fields[index[c]]; };
        PanelRow r;
        r.agency_id = std::string(f(0));
        if (r.agency_id.empty()) throw SchemaError("column 'agency_id': empty", line_no);
        r.event_id = parse_number<std::uint64_t>(f(1), kColumns[1], line_no);
        r.week = parse_number<int>(f(2), kColumns[2], line_no);
        r.quarter = parse_number<int>(f(3), kColumns[3], line_no);
        r.league_id = std::string(f(4));
        try {
            r.sport = parse_sport(f(5));
            r.policy = odds::parse_policy_kind(f(9));
        } catch (const ValidationError& e) {
            throw SchemaError(e.what(), line_no);
        }
        r.n_outcomes = parse_number<int>(f(6), kColumns[6], line_no);
        r.treated = parse_flag(f(7), kColumns[7], line_no);
        r.post = parse_flag(f(8), kColumns[8], line_no);
        r.policy_active = parse_flag(f(10), kColumns[10], line_no);
        r.posted_price = parse_number<double>(f(11), kColumns[11], line_no);
        r.effective_price = parse_number<double>(f(12), kColumns[12], line_no);
        if (has_probs && !fields[prob_index].empty()) {
            std::string_view probs = fields[prob_index];
            std::size_t start = 0;
            for (;;) {
                const auto semi = probs.find(';', start);
                const auto piece = probs.substr(start, semi == std::string_view::npos ? semi : semi - start);
                r.true_probabilities.push_back(parse_number<double>(piece, kProbColumn, line_no));
                if (semi == std::string_view::npos) break;
                start = semi + 1;
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<PanelRow> read_panel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open panel '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    return read_panel_text(text);
}

}  // namespace shroudlab::datagen
