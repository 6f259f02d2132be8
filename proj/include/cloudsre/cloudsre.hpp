#pragma once

#include "cloudsre/cloud.hpp"
#include "cloudsre/diagnostics.hpp"
#include "cloudsre/errors.hpp"
#include "cloudsre/noise.hpp"
#include "cloudsre/special_functions.hpp"
#include "cloudsre/sre.hpp"
#include "cloudsre/stats.hpp"
#include "cloudsre/version.hpp"
