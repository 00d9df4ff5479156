#pragma once

#include <string>
#include <utility>
#include <vector>

namespace isolab {
namespace report {

/// %.17g rendering used for every floating-point field; round-trips doubles
/// and keeps reruns byte-identical
std::string fmt(double v);

/// insertion-ordered JSON for emission only (no parser); doubles go through
/// fmt(), non-finite values are rejected
class Json {
  public:
    static Json object();
    static Json array();
    static Json number(double v);
    static Json integer(long long v);
    static Json str(std::string s);
    static Json boolean(bool b);

    Json& set(const std::string& key, Json v);  // object only
    Json& push(Json v);                         // array only

    std::string dump(int indent = 2) const;

  private:
    enum class Kind { object, array, number, integer, string, boolean };
    Kind kind_ = Kind::object;
    double num_ = 0;
    long long int_ = 0;
    bool bool_ = false;
    std::string str_;
    std::vector<std::pair<std::string, Json>> members_;
    std::vector<Json> items_;

    void write(std::string& out, int indent, int depth) const;
};

/// comment-prefixed metadata lines, one header row, data rows
struct Csv {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_meta(const std::string& key, const std::string& value);
    void add_meta(const std::string& key, double value);
    std::vector<std::string>& add_row();
    std::string dump() const;
};

}  // namespace report
}  // namespace isolab
