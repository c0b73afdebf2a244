#include "larm/recon.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace larm {

namespace {

using json = nlohmann::json;

// Classic marching cubes tables (Lorensen & Cline case enumeration, the
// widely mirrored 256-entry form). Corner order: 0:(0,0,0) 1:(1,0,0)
// 2:(1,1,0) 3:(0,1,0) 4:(0,0,1) 5:(1,0,1) 6:(1,1,1) 7:(0,1,1); edge i
// connects kEdgeCorners[i].
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

const int kTriTable[256][16] = {
{-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,8,3,9,8,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,1,2,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,2,10,0,2,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,8,3,2,10,8,10,9,8,-1,-1,-1,-1,-1,-1,-1},
{3,11,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,11,2,8,11,0,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,9,0,2,3,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,11,2,1,9,11,9,8,11,-1,-1,-1,-1,-1,-1,-1},
{3,10,1,11,10,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,10,1,0,8,10,8,11,10,-1,-1,-1,-1,-1,-1,-1},
{3,9,0,3,11,9,11,10,9,-1,-1,-1,-1,-1,-1,-1},
{9,8,10,10,8,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,7,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,3,0,7,3,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,8,4,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,1,9,4,7,1,7,3,1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,8,4,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,4,7,3,0,4,1,2,10,-1,-1,-1,-1,-1,-1,-1},
{9,2,10,9,0,2,8,4,7,-1,-1,-1,-1,-1,-1,-1},
{2,10,9,2,9,7,2,7,3,7,9,4,-1,-1,-1,-1},
{8,4,7,3,11,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,4,7,11,2,4,2,0,4,-1,-1,-1,-1,-1,-1,-1},
{9,0,1,8,4,7,2,3,11,-1,-1,-1,-1,-1,-1,-1},
{4,7,11,9,4,11,9,11,2,9,2,1,-1,-1,-1,-1},
{3,10,1,3,11,10,7,8,4,-1,-1,-1,-1,-1,-1,-1},
{1,11,10,1,4,11,1,0,4,7,11,4,-1,-1,-1,-1},
{4,7,8,9,0,11,9,11,10,11,0,3,-1,-1,-1,-1},
{4,7,11,4,11,9,9,11,10,-1,-1,-1,-1,-1,-1,-1},
{9,5,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,5,4,0,8,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,5,4,1,5,0,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,5,4,8,3,5,3,1,5,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,9,5,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,0,8,1,2,10,4,9,5,-1,-1,-1,-1,-1,-1,-1},
{5,2,10,5,4,2,4,0,2,-1,-1,-1,-1,-1,-1,-1},
{2,10,5,3,2,5,3,5,4,3,4,8,-1,-1,-1,-1},
{9,5,4,2,3,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,11,2,0,8,11,4,9,5,-1,-1,-1,-1,-1,-1,-1},
{0,5,4,0,1,5,2,3,11,-1,-1,-1,-1,-1,-1,-1},
{2,1,5,2,5,8,2,8,11,4,8,5,-1,-1,-1,-1},
{10,3,11,10,1,3,9,5,4,-1,-1,-1,-1,-1,-1,-1},
{4,9,5,0,8,1,8,10,1,8,11,10,-1,-1,-1,-1},
{5,4,0,5,0,11,5,11,10,11,0,3,-1,-1,-1,-1},
{5,4,8,5,8,10,10,8,11,-1,-1,-1,-1,-1,-1,-1},
{9,7,8,5,7,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,3,0,9,5,3,5,7,3,-1,-1,-1,-1,-1,-1,-1},
{0,7,8,0,1,7,1,5,7,-1,-1,-1,-1,-1,-1,-1},
{1,5,3,3,5,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,7,8,9,5,7,10,1,2,-1,-1,-1,-1,-1,-1,-1},
{10,1,2,9,5,0,5,3,0,5,7,3,-1,-1,-1,-1},
{8,0,2,8,2,5,8,5,7,10,5,2,-1,-1,-1,-1},
{2,10,5,2,5,3,3,5,7,-1,-1,-1,-1,-1,-1,-1},
{7,9,5,7,8,9,3,11,2,-1,-1,-1,-1,-1,-1,-1},
{9,5,7,9,7,2,9,2,0,2,7,11,-1,-1,-1,-1},
{2,3,11,0,1,8,1,7,8,1,5,7,-1,-1,-1,-1},
{11,2,1,11,1,7,7,1,5,-1,-1,-1,-1,-1,-1,-1},
{9,5,8,8,5,7,10,1,3,10,3,11,-1,-1,-1,-1},
{5,7,0,5,0,9,7,11,0,1,0,10,11,10,0,-1},
{11,10,0,11,0,3,10,5,0,8,0,7,5,7,0,-1},
{11,10,5,7,11,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{10,6,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,5,10,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,0,1,5,10,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,8,3,1,9,8,5,10,6,-1,-1,-1,-1,-1,-1,-1},
{1,6,5,2,6,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,6,5,1,2,6,3,0,8,-1,-1,-1,-1,-1,-1,-1},
{9,6,5,9,0,6,0,2,6,-1,-1,-1,-1,-1,-1,-1},
{5,9,8,5,8,2,5,2,6,3,2,8,-1,-1,-1,-1},
{2,3,11,10,6,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,0,8,11,2,0,10,6,5,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,2,3,11,5,10,6,-1,-1,-1,-1,-1,-1,-1},
{5,10,6,1,9,2,9,11,2,9,8,11,-1,-1,-1,-1},
{6,3,11,6,5,3,5,1,3,-1,-1,-1,-1,-1,-1,-1},
{0,8,11,0,11,5,0,5,1,5,11,6,-1,-1,-1,-1},
{3,11,6,0,3,6,0,6,5,0,5,9,-1,-1,-1,-1},
{6,5,9,6,9,11,11,9,8,-1,-1,-1,-1,-1,-1,-1},
{5,10,6,4,7,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,3,0,4,7,3,6,5,10,-1,-1,-1,-1,-1,-1,-1},
{1,9,0,5,10,6,8,4,7,-1,-1,-1,-1,-1,-1,-1},
{10,6,5,1,9,7,1,7,3,7,9,4,-1,-1,-1,-1},
{6,1,2,6,5,1,4,7,8,-1,-1,-1,-1,-1,-1,-1},
{1,2,5,5,2,6,3,0,4,3,4,7,-1,-1,-1,-1},
{8,4,7,9,0,5,0,6,5,0,2,6,-1,-1,-1,-1},
{7,3,9,7,9,4,3,2,9,5,9,6,2,6,9,-1},
{3,11,2,7,8,4,10,6,5,-1,-1,-1,-1,-1,-1,-1},
{5,10,6,4,7,2,4,2,0,2,7,11,-1,-1,-1,-1},
{0,1,9,4,7,8,2,3,11,5,10,6,-1,-1,-1,-1},
{9,2,1,9,11,2,9,4,11,7,11,4,5,10,6,-1},
{8,4,7,3,11,5,3,5,1,5,11,6,-1,-1,-1,-1},
{5,1,11,5,11,6,1,0,11,7,11,4,0,4,11,-1},
{0,5,9,0,6,5,0,3,6,11,6,3,8,4,7,-1},
{6,5,9,6,9,11,4,7,9,7,11,9,-1,-1,-1,-1},
{10,4,9,6,4,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,10,6,4,9,10,0,8,3,-1,-1,-1,-1,-1,-1,-1},
{10,0,1,10,6,0,6,4,0,-1,-1,-1,-1,-1,-1,-1},
{8,3,1,8,1,6,8,6,4,6,1,10,-1,-1,-1,-1},
{1,4,9,1,2,4,2,6,4,-1,-1,-1,-1,-1,-1,-1},
{3,0,8,1,2,9,2,4,9,2,6,4,-1,-1,-1,-1},
{0,2,4,4,2,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,3,2,8,2,4,4,2,6,-1,-1,-1,-1,-1,-1,-1},
{10,4,9,10,6,4,11,2,3,-1,-1,-1,-1,-1,-1,-1},
{0,8,2,2,8,11,4,9,10,4,10,6,-1,-1,-1,-1},
{3,11,2,0,1,6,0,6,4,6,1,10,-1,-1,-1,-1},
{6,4,1,6,1,10,4,8,1,2,1,11,8,11,1,-1},
{9,6,4,9,3,6,9,1,3,11,6,3,-1,-1,-1,-1},
{8,11,1,8,1,0,11,6,1,9,1,4,6,4,1,-1},
{3,11,6,3,6,0,0,6,4,-1,-1,-1,-1,-1,-1,-1},
{6,4,8,11,6,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,10,6,7,8,10,8,9,10,-1,-1,-1,-1,-1,-1,-1},
{0,7,3,0,10,7,0,9,10,6,7,10,-1,-1,-1,-1},
{10,6,7,1,10,7,1,7,8,1,8,0,-1,-1,-1,-1},
{10,6,7,10,7,1,1,7,3,-1,-1,-1,-1,-1,-1,-1},
{1,2,6,1,6,8,1,8,9,8,6,7,-1,-1,-1,-1},
{2,6,9,2,9,1,6,7,9,0,9,3,7,3,9,-1},
{7,8,0,7,0,6,6,0,2,-1,-1,-1,-1,-1,-1,-1},
{7,3,2,6,7,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,3,11,10,6,8,10,8,9,8,6,7,-1,-1,-1,-1},
{2,0,7,2,7,11,0,9,7,6,7,10,9,10,7,-1},
{1,8,0,1,7,8,1,10,7,6,7,10,2,3,11,-1},
{11,2,1,11,1,7,10,6,1,6,7,1,-1,-1,-1,-1},
{8,9,6,8,6,7,9,1,6,11,6,3,1,3,6,-1},
{0,9,1,11,6,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,8,0,7,0,6,3,11,0,11,6,0,-1,-1,-1,-1},
{7,11,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,6,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,0,8,11,7,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,1,9,11,7,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,1,9,8,3,1,11,7,6,-1,-1,-1,-1,-1,-1,-1},
{10,1,2,6,11,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,3,0,8,6,11,7,-1,-1,-1,-1,-1,-1,-1},
{2,9,0,2,10,9,6,11,7,-1,-1,-1,-1,-1,-1,-1},
{6,11,7,2,10,3,10,8,3,10,9,8,-1,-1,-1,-1},
{7,2,3,6,2,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{7,0,8,7,6,0,6,2,0,-1,-1,-1,-1,-1,-1,-1},
{2,7,6,2,3,7,0,1,9,-1,-1,-1,-1,-1,-1,-1},
{1,6,2,1,8,6,1,9,8,8,7,6,-1,-1,-1,-1},
{10,7,6,10,1,7,1,3,7,-1,-1,-1,-1,-1,-1,-1},
{10,7,6,1,7,10,1,8,7,1,0,8,-1,-1,-1,-1},
{0,3,7,0,7,10,0,10,9,6,10,7,-1,-1,-1,-1},
{7,6,10,7,10,8,8,10,9,-1,-1,-1,-1,-1,-1,-1},
{6,8,4,11,8,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,6,11,3,0,6,0,4,6,-1,-1,-1,-1,-1,-1,-1},
{8,6,11,8,4,6,9,0,1,-1,-1,-1,-1,-1,-1,-1},
{9,4,6,9,6,3,9,3,1,11,3,6,-1,-1,-1,-1},
{6,8,4,6,11,8,2,10,1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,3,0,11,0,6,11,0,4,6,-1,-1,-1,-1},
{4,11,8,4,6,11,0,2,9,2,10,9,-1,-1,-1,-1},
{10,9,3,10,3,2,9,4,3,11,3,6,4,6,3,-1},
{8,2,3,8,4,2,4,6,2,-1,-1,-1,-1,-1,-1,-1},
{0,4,2,4,6,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,9,0,2,3,4,2,4,6,4,3,8,-1,-1,-1,-1},
{1,9,4,1,4,2,2,4,6,-1,-1,-1,-1,-1,-1,-1},
{8,1,3,8,6,1,8,4,6,6,10,1,-1,-1,-1,-1},
{10,1,0,10,0,6,6,0,4,-1,-1,-1,-1,-1,-1,-1},
{4,6,3,4,3,8,6,10,3,0,3,9,10,9,3,-1},
{10,9,4,6,10,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,9,5,7,6,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,4,9,5,11,7,6,-1,-1,-1,-1,-1,-1,-1},
{5,0,1,5,4,0,7,6,11,-1,-1,-1,-1,-1,-1,-1},
{11,7,6,8,3,4,3,5,4,3,1,5,-1,-1,-1,-1},
{9,5,4,10,1,2,7,6,11,-1,-1,-1,-1,-1,-1,-1},
{6,11,7,1,2,10,0,8,3,4,9,5,-1,-1,-1,-1},
{7,6,11,5,4,10,4,2,10,4,0,2,-1,-1,-1,-1},
{3,4,8,3,5,4,3,2,5,10,5,2,11,7,6,-1},
{7,2,3,7,6,2,5,4,9,-1,-1,-1,-1,-1,-1,-1},
{9,5,4,0,8,6,0,6,2,6,8,7,-1,-1,-1,-1},
{3,6,2,3,7,6,1,5,0,5,4,0,-1,-1,-1,-1},
{6,2,8,6,8,7,2,1,8,4,8,5,1,5,8,-1},
{9,5,4,10,1,6,1,7,6,1,3,7,-1,-1,-1,-1},
{1,6,10,1,7,6,1,0,7,8,7,0,9,5,4,-1},
{4,0,10,4,10,5,0,3,10,6,10,7,3,7,10,-1},
{7,6,10,7,10,8,5,4,10,4,8,10,-1,-1,-1,-1},
{6,9,5,6,11,9,11,8,9,-1,-1,-1,-1,-1,-1,-1},
{3,6,11,0,6,3,0,5,6,0,9,5,-1,-1,-1,-1},
{0,11,8,0,5,11,0,1,5,5,6,11,-1,-1,-1,-1},
{6,11,3,6,3,5,5,3,1,-1,-1,-1,-1,-1,-1,-1},
{1,2,10,9,5,11,9,11,8,11,5,6,-1,-1,-1,-1},
{0,11,3,0,6,11,0,9,6,5,6,9,1,2,10,-1},
{11,8,5,11,5,6,8,0,5,10,5,2,0,2,5,-1},
{6,11,3,6,3,5,2,10,3,10,5,3,-1,-1,-1,-1},
{5,8,9,5,2,8,5,6,2,3,8,2,-1,-1,-1,-1},
{9,5,6,9,6,0,0,6,2,-1,-1,-1,-1,-1,-1,-1},
{1,5,8,1,8,0,5,6,8,3,8,2,6,2,8,-1},
{1,5,6,2,1,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,3,6,1,6,10,3,8,6,5,6,9,8,9,6,-1},
{10,1,0,10,0,6,9,5,0,5,6,0,-1,-1,-1,-1},
{0,3,8,5,6,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{10,5,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,5,10,7,5,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{11,5,10,11,7,5,8,3,0,-1,-1,-1,-1,-1,-1,-1},
{5,11,7,5,10,11,1,9,0,-1,-1,-1,-1,-1,-1,-1},
{10,7,5,10,11,7,9,8,1,8,3,1,-1,-1,-1,-1},
{11,1,2,11,7,1,7,5,1,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,1,2,7,1,7,5,7,2,11,-1,-1,-1,-1},
{9,7,5,9,2,7,9,0,2,2,11,7,-1,-1,-1,-1},
{7,5,2,7,2,11,5,9,2,3,2,8,9,8,2,-1},
{2,5,10,2,3,5,3,7,5,-1,-1,-1,-1,-1,-1,-1},
{8,2,0,8,5,2,8,7,5,10,2,5,-1,-1,-1,-1},
{9,0,1,5,10,3,5,3,7,3,10,2,-1,-1,-1,-1},
{9,8,2,9,2,1,8,7,2,10,2,5,7,5,2,-1},
{1,3,5,3,7,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,8,7,0,7,1,1,7,5,-1,-1,-1,-1,-1,-1,-1},
{9,0,3,9,3,5,5,3,7,-1,-1,-1,-1,-1,-1,-1},
{9,8,7,5,9,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{5,8,4,5,10,8,10,11,8,-1,-1,-1,-1,-1,-1,-1},
{5,0,4,5,11,0,5,10,11,11,3,0,-1,-1,-1,-1},
{0,1,9,8,4,10,8,10,11,10,4,5,-1,-1,-1,-1},
{10,11,4,10,4,5,11,3,4,9,4,1,3,1,4,-1},
{2,5,1,2,8,5,2,11,8,4,5,8,-1,-1,-1,-1},
{0,4,11,0,11,3,4,5,11,2,11,1,5,1,11,-1},
{0,2,5,0,5,9,2,11,5,4,5,8,11,8,5,-1},
{9,4,5,2,11,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,5,10,3,5,2,3,4,5,3,8,4,-1,-1,-1,-1},
{5,10,2,5,2,4,4,2,0,-1,-1,-1,-1,-1,-1,-1},
{3,10,2,3,5,10,3,8,5,4,5,8,0,1,9,-1},
{5,10,2,5,2,4,1,9,2,9,4,2,-1,-1,-1,-1},
{8,4,5,8,5,3,3,5,1,-1,-1,-1,-1,-1,-1,-1},
{0,4,5,1,0,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{8,4,5,8,5,3,9,0,5,0,3,5,-1,-1,-1,-1},
{9,4,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,11,7,4,9,11,9,10,11,-1,-1,-1,-1,-1,-1,-1},
{0,8,3,4,9,7,9,11,7,9,10,11,-1,-1,-1,-1},
{1,10,11,1,11,4,1,4,0,7,4,11,-1,-1,-1,-1},
{3,1,4,3,4,8,1,10,4,7,4,11,10,11,4,-1},
{4,11,7,9,11,4,9,2,11,9,1,2,-1,-1,-1,-1},
{9,7,4,9,11,7,9,1,11,2,11,1,0,8,3,-1},
{11,7,4,11,4,2,2,4,0,-1,-1,-1,-1,-1,-1,-1},
{11,7,4,11,4,2,8,3,4,3,2,4,-1,-1,-1,-1},
{2,9,10,2,7,9,2,3,7,7,4,9,-1,-1,-1,-1},
{9,10,7,9,7,4,10,2,7,8,7,0,2,0,7,-1},
{3,7,10,3,10,2,7,4,10,1,10,0,4,0,10,-1},
{1,10,2,8,7,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,9,1,4,1,7,7,1,3,-1,-1,-1,-1,-1,-1,-1},
{4,9,1,4,1,7,0,8,1,8,7,1,-1,-1,-1,-1},
{4,0,3,7,4,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{4,8,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{9,10,8,10,11,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,0,9,3,9,11,11,9,10,-1,-1,-1,-1,-1,-1,-1},
{0,1,10,0,10,8,8,10,11,-1,-1,-1,-1,-1,-1,-1},
{3,1,10,11,3,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,2,11,1,11,9,9,11,8,-1,-1,-1,-1,-1,-1,-1},
{3,0,9,3,9,11,1,2,9,2,11,9,-1,-1,-1,-1},
{0,2,11,8,0,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{3,2,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,3,8,2,8,10,10,8,9,-1,-1,-1,-1,-1,-1,-1},
{9,10,2,0,9,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{2,3,8,2,8,10,0,1,8,1,10,8,-1,-1,-1,-1},
{1,10,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{1,3,8,9,1,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,9,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{0,3,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
{-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1}};

}  // namespace

const int (*marching_cubes_tri_table())[16] { return kTriTable; }
const int (*marching_cubes_edge_corners())[2] { return kEdgeCorners; }

void TsdfVolume::validate() const {
  if (truncation < 2.0 * voxel_size - 1e-12)
    throw Error(ErrorCode::InvalidArgument, "truncation below two voxels");
  for (float w : weight)
    if (w < 0) throw Error(ErrorCode::InvalidArgument, "negative fusion weight");
}

TsdfVolume::TsdfVolume(int res, const Vec3& lo, const Vec3& hi, double truncation_voxels) {
  resolution = res;
  origin = lo;
  voxel_size = (hi - lo).maxCoeff() / res;
  truncation = truncation_voxels * voxel_size;
  allocate();
  validate();
}

void PartMesh::validate() const {
  for (const auto& v : vertices)
    if (!v.allFinite()) throw Error(ErrorCode::DegenerateMesh, "non-finite vertex");
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles)
    for (int i : t)
      if (i < 0 || i >= n) throw Error(ErrorCode::DegenerateMesh, "triangle index out of range");
  if (colors.size() != vertices.size())
    throw Error(ErrorCode::DegenerateMesh, "color/vertex count mismatch");
}

std::pair<LabeledPointCloud, LabeledPointCloud> fuse_views(
    const std::vector<SampleFrame>& frames) {
  if (frames.size() < 4)
    throw Error(ErrorCode::InvalidArgument, "fusion needs at least 4 views");
  LabeledPointCloud body, movable;
  for (const auto& f : frames) {
    for (int y = 0; y < f.depth.height; ++y)
      for (int x = 0; x < f.depth.width; ++x) {
        if (!f.fg_mask.at(x, y)) continue;
        Vec3 p = unproject_pixel(x + 0.5, y + 0.5, f.depth.at(x, y), f.intr, f.pose);
        Vec3 c(f.rgb.at(x, y, 0), f.rgb.at(x, y, 1), f.rgb.at(x, y, 2));
        bool part = f.part_mask.at(x, y) != 0;
        LabeledPointCloud& dst = part ? movable : body;
        dst.points.push_back(p);
        dst.colors.push_back(c);
        dst.labels.push_back(part ? PartLabel::Movable : PartLabel::Body);
      }
  }
  if (body.points.empty() && movable.points.empty())
    throw Error(ErrorCode::EmptyCloud, "no foreground pixels across views");
  return {std::move(body), std::move(movable)};
}

void tsdf_integrate(TsdfVolume& volume, const Prediction& frame, PartLabel filter,
                    double ambiguity_margin) {
  const int res = volume.resolution;
  const double trunc = volume.truncation;
  const CameraIntrinsics& intr = frame.intr;
  const Mat3 Rt = frame.pose.rotation.transpose();
  const Vec3 cam_t = frame.pose.translation;

  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        Vec3 pc = Rt * (volume.voxel_center(x, y, z) - cam_t);
        if (pc.z() <= kDepthNear) continue;
        double u = intr.fx * pc.x() / pc.z() + intr.cx;
        double v = intr.fy * pc.y() / pc.z() + intr.cy;
        int px = static_cast<int>(std::floor(u));
        int py = static_cast<int>(std::floor(v));
        if (px < 0 || py < 0 || px >= intr.width || py >= intr.height) continue;

        double part_p = frame.part_prob.at(px, py);
        if (std::abs(part_p - 0.5) < ambiguity_margin) continue;  // label too uncertain
        bool fg = frame.fg_prob.at(px, py) >= 0.5f;
        bool matches =
            fg && ((filter == PartLabel::Movable) == (part_p >= 0.5));
        double depth = fg ? static_cast<double>(frame.depth.at(px, py)) : kDepthFar;

        size_t i = volume.index(x, y, z);
        if (matches) {
          double sdf = depth - pc.z();
          if (sdf < -trunc) continue;  // occluded, unknown
          float val = static_cast<float>(std::min(1.0, sdf / trunc));
          float w = volume.weight[i];
          volume.sdf[i] = (volume.sdf[i] * w + val) / (w + 1.0f);
          volume.weight[i] = w + 1.0f;
          if (std::abs(sdf) <= trunc) {
            float cw = volume.color_weight[i];
            for (int c = 0; c < 3; ++c)
              volume.color[i * 3 + c] =
                  (volume.color[i * 3 + c] * cw + frame.rgb.at(px, py, c)) / (cw + 1.0f);
            volume.color_weight[i] = cw + 1.0f;
          }
        } else if (pc.z() < depth - trunc) {
          // definite free space along this ray regardless of label
          float w = volume.weight[i];
          volume.sdf[i] = (volume.sdf[i] * w + 1.0f) / (w + 1.0f);
          volume.weight[i] = w + 1.0f;
        }
      }
}

PartMesh extract_mesh(const TsdfVolume& volume) {
  const int res = volume.resolution;
  PartMesh mesh;
  std::map<std::array<int, 4>, int> edge_vertex;  // (x, y, z, axis) -> vertex id

  auto corner_color = [&](size_t i) {
    float cw = volume.color_weight[i];
    if (cw <= 0) return Vec3(0.5, 0.5, 0.5);
    return Vec3(volume.color[i * 3], volume.color[i * 3 + 1], volume.color[i * 3 + 2]);
  };

  for (int z = 0; z + 1 < res; ++z)
    for (int y = 0; y + 1 < res; ++y)
      for (int x = 0; x + 1 < res; ++x) {
        float s[8];
        size_t idx[8];
        bool observed = true;
        for (int c = 0; c < 8; ++c) {
          idx[c] = volume.index(x + kCornerOffset[c][0], y + kCornerOffset[c][1],
                                z + kCornerOffset[c][2]);
          observed &= volume.weight[idx[c]] > 0;
          s[c] = volume.sdf[idx[c]];
        }
        if (!observed) continue;
        int cube = 0;
        for (int c = 0; c < 8; ++c)
          if (s[c] < 0) cube |= 1 << c;
        const int* tris = kTriTable[cube];
        if (tris[0] < 0) continue;

        auto edge_vert = [&](int e) {
          int a = kEdgeCorners[e][0], b = kEdgeCorners[e][1];
          std::array<int, 3> ca{x + kCornerOffset[a][0], y + kCornerOffset[a][1],
                                z + kCornerOffset[a][2]};
          std::array<int, 3> cb{x + kCornerOffset[b][0], y + kCornerOffset[b][1],
                                z + kCornerOffset[b][2]};
          int axis = ca[0] != cb[0] ? 0 : (ca[1] != cb[1] ? 1 : 2);
          std::array<int, 4> key{std::min(ca[0], cb[0]), std::min(ca[1], cb[1]),
                                 std::min(ca[2], cb[2]), axis};
          auto it = edge_vertex.find(key);
          if (it != edge_vertex.end()) return it->second;
          double sa = s[a], sb = s[b];
          double t = sa == sb ? 0.5 : sa / (sa - sb);
          t = std::clamp(t, 0.0, 1.0);
          Vec3 pa = volume.voxel_center(ca[0], ca[1], ca[2]);
          Vec3 pb = volume.voxel_center(cb[0], cb[1], cb[2]);
          int id = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(pa + t * (pb - pa));
          Vec3 col = corner_color(idx[a]) + t * (corner_color(idx[b]) - corner_color(idx[a]));
          mesh.colors.push_back(col);
          edge_vertex.emplace(key, id);
          return id;
        };

        for (int t = 0; tris[t] >= 0; t += 3) {
          int v0 = edge_vert(tris[t]);
          int v1 = edge_vert(tris[t + 1]);
          int v2 = edge_vert(tris[t + 2]);
          if (v0 == v1 || v1 == v2 || v0 == v2) continue;  // degenerate sliver
          mesh.triangles.push_back({v0, v1, v2});
        }
      }
  if (mesh.triangles.empty())
    throw Error(ErrorCode::NoSurface, "no zero crossing in the observed volume");
  mesh.validate();
  return mesh;
}

namespace {

std::vector<CameraPose> recon_cameras(int n_views, uint64_t seed) {
  Rng rng(seed ^ 0x8f1bbcdc3c6ef372ull);
  std::vector<CameraPose> poses;
  for (int i = 0; i < n_views; ++i) poses.push_back(sample_camera(rng));
  return poses;
}

}  // namespace

std::pair<PartMesh, PartMesh> reconstruct(const ViewSynthesizer& synth, const ReconConfig& cfg) {
  CameraIntrinsics intr = default_intrinsics(cfg.image_resolution);
  TsdfVolume body_vol(cfg.volume_resolution, Vec3(-0.6, -0.6, -0.6), Vec3(0.6, 0.6, 0.6));
  TsdfVolume part_vol(cfg.volume_resolution, Vec3(-0.6, -0.6, -0.6), Vec3(0.6, 0.6, 0.6));
  for (const CameraPose& pose : recon_cameras(cfg.n_views, cfg.seed)) {
    Prediction pred = synth.synthesize(intr, pose, 0.0);
    tsdf_integrate(body_vol, pred, PartLabel::Body, cfg.ambiguity_margin);
    tsdf_integrate(part_vol, pred, PartLabel::Movable, cfg.ambiguity_margin);
  }
  PartMesh body = extract_mesh(body_vol);
  body.label = "body";
  PartMesh movable = extract_mesh(part_vol);
  movable.label = "movable";
  return {std::move(body), std::move(movable)};
}

std::pair<PartMesh, PartMesh> pose_mesh_at_state(const std::pair<PartMesh, PartMesh>& meshes,
                                                 const JointSpec& joint, double theta) {
  joint.validate();
  std::pair<PartMesh, PartMesh> out = meshes;
  RigidTransform T = joint_transform(joint, 0.0, theta);
  for (auto& v : out.second.vertices) v = T.apply(v);
  return out;
}

Prediction OracleMultiSynthesizer::synthesize(int part, const CameraIntrinsics& intr,
                                              const CameraPose& pose, double theta) const {
  std::vector<double> states(scene_->num_joints(), 0.0);
  states[part] = theta;
  return Prediction::from_frame(rasterize_states(*scene_, intr, pose, states, part));
}

namespace {

/// Per-part adapter so the single-joint estimation pipeline can run on one
/// part of a multi-joint object.
class PartViewAdapter : public ViewSynthesizer {
 public:
  PartViewAdapter(const MultiPartSynthesizer& synth, int part) : synth_(&synth), part_(part) {}
  Prediction synthesize(const CameraIntrinsics& intr, const CameraPose& pose,
                        double theta) const override {
    return synth_->synthesize(part_, intr, pose, theta);
  }

 private:
  const MultiPartSynthesizer* synth_;
  int part_;
};

}  // namespace

MultiPartResult multi_part_reconstruct(const MultiPartSynthesizer& synth,
                                       const std::vector<JointKind>& kinds,
                                       const std::vector<const Matcher*>& matchers,
                                       const ReconConfig& recon_cfg,
                                       const EstimateConfig& estimate_cfg) {
  const int K = synth.num_parts();
  if (K < 1 || static_cast<int>(kinds.size()) != K || static_cast<int>(matchers.size()) != K)
    throw Error(ErrorCode::InvalidArgument, "kinds/matchers must cover every part");

  MultiPartResult result;
  auto annotate = [](const Error& e, int part) {
    return Error(e.code(), std::string("part ") + std::to_string(part) + ": " + e.what());
  };

  for (int k = 0; k < K; ++k) {
    PartViewAdapter adapter(synth, k);
    try {
      result.joints.push_back(estimate_joint(adapter, kinds[k], *matchers[k], estimate_cfg));
    } catch (const Error& e) {
      throw annotate(e, k);
    }
  }

  // all joints rest at theta = 0, so any part's view stream shares geometry;
  // the body volume excludes the union of all part masks
  TsdfVolume body_vol(recon_cfg.volume_resolution, Vec3(-0.6, -0.6, -0.6), Vec3(0.6, 0.6, 0.6));
  std::vector<TsdfVolume> part_vols;
  for (int k = 0; k < K; ++k)
    part_vols.emplace_back(recon_cfg.volume_resolution, Vec3(-0.6, -0.6, -0.6),
                           Vec3(0.6, 0.6, 0.6));

  CameraIntrinsics intr = default_intrinsics(recon_cfg.image_resolution);
  for (const CameraPose& pose : recon_cameras(recon_cfg.n_views, recon_cfg.seed)) {
    std::vector<Prediction> preds;
    for (int k = 0; k < K; ++k) preds.push_back(synth.synthesize(k, intr, pose, 0.0));
    for (int k = 0; k < K; ++k)
      tsdf_integrate(part_vols[k], preds[k], PartLabel::Movable, recon_cfg.ambiguity_margin);
    Prediction combined = preds[0];
    for (int k = 1; k < K; ++k)
      for (size_t i = 0; i < combined.part_prob.data.size(); ++i)
        combined.part_prob.data[i] =
            std::max(combined.part_prob.data[i], preds[k].part_prob.data[i]);
    tsdf_integrate(body_vol, combined, PartLabel::Body, recon_cfg.ambiguity_margin);
  }

  result.body = extract_mesh(body_vol);
  result.body.label = "body";
  for (int k = 0; k < K; ++k) {
    try {
      result.parts.push_back(extract_mesh(part_vols[k]));
      result.parts.back().label = "movable";
    } catch (const Error& e) {
      throw annotate(e, k);
    }
  }
  return result;
}

void write_ply(const PartMesh& mesh, const fs::path& path) {
  mesh.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write " + path.string());
  out << "ply\nformat ascii 1.0\n";
  out << "comment label " << mesh.label << "\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const Vec3& c = mesh.colors[i];
    auto q = [](double x) { return std::clamp(static_cast<int>(std::lround(x * 255.0)), 0, 255); };
    out << static_cast<float>(v.x()) << ' ' << static_cast<float>(v.y()) << ' '
        << static_cast<float>(v.z()) << ' ' << q(c.x()) << ' ' << q(c.y()) << ' ' << q(c.z())
        << '\n';
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (!out) throw Error(ErrorCode::DiskWrite, "failed writing " + path.string());
}

PartMesh read_ply(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::CorruptHeader, "cannot open " + path.string());
  std::string line;
  size_t n_verts = 0, n_faces = 0;
  PartMesh mesh;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "element") {
      std::string what;
      size_t n;
      ss >> what >> n;
      (what == "vertex" ? n_verts : n_faces) = n;
    } else if (tok == "comment") {
      std::string key;
      ss >> key;
      if (key == "label") ss >> mesh.label;
    } else if (tok == "end_header") {
      break;
    }
  }
  for (size_t i = 0; i < n_verts; ++i) {
    double x, y, z;
    int r, g, b;
    if (!(in >> x >> y >> z >> r >> g >> b))
      throw Error(ErrorCode::CorruptHeader, "truncated vertex list");
    mesh.vertices.emplace_back(x, y, z);
    mesh.colors.emplace_back(r / 255.0, g / 255.0, b / 255.0);
  }
  for (size_t i = 0; i < n_faces; ++i) {
    int n, a, b, c;
    if (!(in >> n >> a >> b >> c) || n != 3)
      throw Error(ErrorCode::CorruptHeader, "non-triangle face");
    mesh.triangles.push_back({a, b, c});
  }
  mesh.validate();
  return mesh;
}

void write_articulated_descriptor(const std::string& body_mesh_path,
                                  const std::vector<ArticulatedPartEntry>& parts,
                                  const fs::path& path) {
  json j;
  j["body"] = body_mesh_path;
  j["parts"] = json::array();
  for (const auto& p : parts) {
    json e;
    e["mesh_path"] = p.mesh_path;
    e["joint"] = {{"kind", to_string(p.joint.kind)},
                  {"axis", {p.joint.axis.x(), p.joint.axis.y(), p.joint.axis.z()}},
                  {"pivot", {p.joint.pivot.x(), p.joint.pivot.y(), p.joint.pivot.z()}},
                  {"scale", p.joint.scale}};
    j["parts"].push_back(std::move(e));
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace larm
