#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pforge {

// A text template with {name} placeholders. Rendering substitutes every
// placeholder and rejects unknown or missing keys; literal braces are not
// escaped (template texts do not contain any).
class TextTemplate {
 public:
  explicit TextTemplate(std::string text);
  static TextTemplate from_file(const std::filesystem::path& path);

  std::string render(const std::map<std::string, std::string>& values) const;
  const std::vector<std::string>& placeholders() const { return placeholders_; }
  const std::string& raw() const { return text_; }

 private:
  std::string text_;
  std::vector<std::string> placeholders_;  // unique, in first-appearance order
};

// Loads the named template from the directory baked in at build time
// (overridable via the PFORGE_TEMPLATE_DIR environment variable).
TextTemplate load_template(const std::string& name);
std::filesystem::path template_dir();

// Display names used inside prompts, e.g. "de" -> "German". Throws
// ConfigError for languages outside the supported set.
const std::string& language_display_name(const std::string& code);
const std::vector<std::string>& supported_languages();  // 12 codes, fixed order

}  // namespace pforge
