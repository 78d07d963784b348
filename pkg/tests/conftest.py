import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

SMALL_NODES = """\
code,name,continent,lon,lat
CHN,China,Asia,116.40,39.90
AAA,Alphaland,Europe,10.0,50.0
BBB,Betaland,Europe,2.0,48.0
CCC,Gammaland,Africa,3.0,6.0
DDD,Deltaland,SouthAmerica,-58.0,-34.0
"""

# Undirected projection is the path CHN-AAA-BBB-CCC-DDD.
SMALL_EDGES = """\
origin,dest,weight
CHN,AAA,1000
BBB,AAA,500
BBB,CCC,800
DDD,CCC,300
"""

SMALL_VARIABLES = """\
code,DFW,GDP,CST
CHN,10,1000.5,1
AAA,20,800.25,1
BBB,30,600,0
CCC,35,400,1
DDD,50,200,0
"""


@pytest.fixture(scope="session")
def fixture_paths():
    return {
        "nodes": FIXTURES / "nodes.csv",
        "edges": FIXTURES / "edges.csv",
        "variables": FIXTURES / "variables.csv",
    }


@pytest.fixture()
def small_files(tmp_path):
    paths = {}
    for name, text in (("nodes", SMALL_NODES), ("edges", SMALL_EDGES),
                       ("variables", SMALL_VARIABLES)):
        p = tmp_path / f"{name}.csv"
        p.write_text(text)
        paths[name] = p
    return paths
