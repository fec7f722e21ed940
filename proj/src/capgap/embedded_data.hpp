#pragma once

#include <string_view>

// Default dictionaries compiled from data/. Each returns the full file text,
// header line included.
namespace capgap::embedded {

std::string_view color_basic();
std::string_view color_nuanced();
std::string_view color_modifiers();
std::string_view texture_basic();
std::string_view texture_nuanced();
std::string_view composition_spatial_layers();
std::string_view composition_subject_focus();
std::string_view composition_guiding_elements();
std::string_view composition_balance_symmetry();
std::string_view stopwords_en();

}  // namespace capgap::embedded
