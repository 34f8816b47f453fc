"""Freeze UTM zone 14N reference coordinates computed with PROJ (via pyproj).

PROJ's UTM uses the Poder/Engsager extended transverse Mercator, an
implementation independent of the one under test. Run once; output is
committed as tests/data/utm_zone14_reference.csv.
"""
import random

from pyproj import Transformer

rng = random.Random(20190310)
to_utm = Transformer.from_crs("EPSG:4326", "EPSG:32614", always_xy=True)

rows = [(30.2672, -97.7431), (0.0, -99.0), (30.0, -99.0)]
while len(rows) < 103:
    lat = rng.uniform(25.0, 35.0)
    lon = rng.uniform(-102.0, -96.0)
    rows.append((lat, lon))

with open("tests/data/utm_zone14_reference.csv", "w") as out:
    out.write("lat_deg,lon_deg,easting_m,northing_m\n")
    for lat, lon in rows:
        e, n = to_utm.transform(lon, lat)
        out.write(f"{lat:.12f},{lon:.12f},{e:.6f},{n:.6f}\n")
