#include "agentsched/errors.hpp"
