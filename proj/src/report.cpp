#include "isolab/report.hpp"

#include <cmath>
#include <cstdio>

#include "isolab/errors.hpp"

namespace isolab {
namespace report {

std::string fmt(double v) {
    if (!std::isfinite(v)) throw NumericsError("non-finite value in report");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json Json::object() {
    Json j;
    j.kind_ = Kind::object;
    return j;
}

Json Json::array() {
    Json j;
    j.kind_ = Kind::array;
    return j;
}

Json Json::number(double v) {
    Json j;
    j.kind_ = Kind::number;
    j.num_ = v;
    if (!std::isfinite(v)) throw NumericsError("non-finite value in report");
    return j;
}

Json Json::integer(long long v) {
    Json j;
    j.kind_ = Kind::integer;
    j.int_ = v;
    return j;
}

Json Json::str(std::string s) {
    Json j;
    j.kind_ = Kind::string;
    j.str_ = std::move(s);
    return j;
}

Json Json::boolean(bool b) {
    Json j;
    j.kind_ = Kind::boolean;
    j.bool_ = b;
    return j;
}

Json& Json::set(const std::string& key, Json v) {
    if (kind_ != Kind::object) throw NumericsError("set on a non-object");
    members_.emplace_back(key, std::move(v));
    return *this;
}

Json& Json::push(Json v) {
    if (kind_ != Kind::array) throw NumericsError("push on a non-array");
    items_.push_back(std::move(v));
    return *this;
}

static void escape(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if ((unsigned char)c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void Json::write(std::string& out, int indent, int depth) const {
    std::string pad(std::size_t(indent) * (depth + 1), ' ');
    std::string close_pad(std::size_t(indent) * depth, ' ');
    switch (kind_) {
        case Kind::object:
            if (members_.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t i = 0; i < members_.size(); ++i) {
                out += pad;
                escape(out, members_[i].first);
                out += ": ";
                members_[i].second.write(out, indent, depth + 1);
                out += i + 1 < members_.size() ? ",\n" : "\n";
            }
            out += close_pad;
            out += '}';
            return;
        case Kind::array:
            if (items_.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < items_.size(); ++i) {
                out += pad;
                items_[i].write(out, indent, depth + 1);
                out += i + 1 < items_.size() ? ",\n" : "\n";
            }
            out += close_pad;
            out += ']';
            return;
        case Kind::number: out += fmt(num_); return;
        case Kind::integer: out += std::to_string(int_); return;
        case Kind::string: escape(out, str_); return;
        case Kind::boolean: out += bool_ ? "true" : "false"; return;
    }
}

std::string Json::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    return out;
}

void Csv::add_meta(const std::string& key, const std::string& value) {
    meta.emplace_back(key, value);
}

void Csv::add_meta(const std::string& key, double value) {
    meta.emplace_back(key, fmt(value));
}

std::vector<std::string>& Csv::add_row() {
    rows.emplace_back();
    return rows.back();
}

static void put_field(std::string& out, const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) {
        out += f;
        return;
    }
    out += '"';
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

std::string Csv::dump() const {
    std::string out;
    for (const auto& [k, v] : meta) out += "# " + k + " = " + v + "\n";
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        put_field(out, header[i]);
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            put_field(out, row[i]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace report
}  // namespace isolab
