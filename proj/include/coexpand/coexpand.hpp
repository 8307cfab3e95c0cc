// Copyright 2026 The coexpand Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COEXPAND_COEXPAND_HPP_
#define COEXPAND_COEXPAND_HPP_

#include "coexpand/auxgen.hpp"
#include "coexpand/coexpan.hpp"
#include "coexpand/common.hpp"
#include "coexpand/config.hpp"
#include "coexpand/context_index.hpp"
#include "coexpand/corpus.hpp"
#include "coexpand/embedding.hpp"
#include "coexpand/evalkit.hpp"

#endif  // COEXPAND_COEXPAND_HPP_
