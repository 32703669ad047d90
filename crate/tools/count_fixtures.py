#!/usr/bin/env python3
"""Counts the nodes and edges a corpus directory should produce.

Written against the fixture templates with the standard library only, so the
numbers asserted in the Rust tests do not come from the Rust parsers.

usage: count_fixtures.py <corpus-dir>
"""
import csv
import glob
import html
import os
import re
import sys
import xml.etree.ElementTree as ET


def cas_ok(c):
    if not re.fullmatch(r"\d{2,7}-\d{2}-\d", c):
        return False
    d = c.replace("-", "")
    return sum((i + 1) * int(x) for i, x in enumerate(reversed(d[:-1]))) % 10 == int(d[-1])


def ec_ok(e):
    if not re.fullmatch(r"\d{3}-\d{3}-\d", e):
        return False
    d = e.replace("-", "")
    s = sum((i + 1) * int(x) for i, x in enumerate(d[:6])) % 11
    return s != 10 and s == int(d[6])


def text(fragment):
    return " ".join(html.unescape(re.sub(r"<[^>]+>", " ", fragment)).split())


def reach(path):
    doc = open(path, encoding="utf-8").read()
    if 'class="substance-factsheet"' not in doc:
        return None
    name = text(re.search(r'<h1 class="substance-name">(.*?)</h1>', doc, re.S).group(1))
    ids = dict((text(k).lower(), text(v)) for k, v in re.findall(r"<dt>(.*?)</dt>\s*<dd>(.*?)</dd>", doc, re.S))
    ec = ids.get("ec number", "-")
    cas = ids.get("cas number", "-")
    ec = None if ec == "-" else ec
    cas = None if cas == "-" else cas
    if (ec and not ec_ok(ec)) or (cas and not cas_ok(cas)):
        return None
    sec = re.search(r'<section class="hazard-classification">(.*?)</section>', doc, re.S)
    hazards = []
    if sec:
        for row in re.findall(r"<tr>(.*?)</tr>", sec.group(1), re.S):
            cells = [text(c) for c in re.findall(r"<td>(.*?)</td>", row, re.S)]
            if cells and tuple(cells) not in hazards:
                hazards.append(tuple(cells))
    if not hazards:
        return None
    sec = re.search(r'<section class="product-categories">(.*?)</section>', doc, re.S)
    cats = []
    if sec:
        for li in re.findall(r"<li>(.*?)</li>", sec.group(1), re.S):
            if text(li) not in cats:
                cats.append(text(li))
    key = "EC:" + ec if ec else "CAS:" + cas
    return dict(key=key, name=name, cas=cas, hazards=hazards, cats=cats)


def organ(label):
    out, depth = "", 0
    for ch in label:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif depth == 0:
            out += ch
    return " ".join(out.lower().split()).strip(".,;: ")


def niosh(path):
    doc = open(path, encoding="utf-8").read()
    cas = text(re.search(r"<th>CAS No\.</th><td>(.*?)</td>", doc, re.S).group(1))
    if not cas_ok(cas):
        return None
    organs_text = text(re.search(r"<th>Target Organs</th><td>(.*?)</td>", doc, re.S).group(1))
    parts, cur, depth = [], "", 0
    for ch in organs_text:
        if ch in "(":
            depth += 1
        if ch in ")":
            depth -= 1
        if ch in ",;" and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    organs = []
    for p in parts:
        o = organ(p)
        if o and o not in organs:
            organs.append(o)
    return cas, organs


def ctd_rows(corpus):
    for path in sorted(glob.glob(os.path.join(corpus, "ctd", "*.csv"))):
        lines = [l for l in open(path, encoding="utf-8") if not l.startswith("#")]
        for row in csv.DictReader(lines):
            yield row
    for path in sorted(glob.glob(os.path.join(corpus, "ctd", "*.xml"))):
        for link in ET.parse(path).getroot().iter("Link"):
            yield {child.tag: (child.text or "") for child in link}


def disease_key(row):
    codes = [c.strip() for c in (row.get("DiseaseID") or "").split("|") if c.strip()]
    mesh = [c for c in codes if c.upper().startswith("MESH:")]
    omim = [c for c in codes if c.upper().startswith("OMIM:")]
    if mesh:
        return "MESH:" + mesh[0].split(":", 1)[1]
    if omim:
        return "OMIM:" + omim[0].split(":", 1)[1]
    extra = [c for c in (row.get("OmimIDs") or "").split("|") if c.strip()]
    return "OMIM:" + extra[0].strip() if extra else None


def main(corpus):
    subs, by_cas = {}, {}
    for path in sorted(glob.glob(os.path.join(corpus, "reach", "*.html"))):
        rec = reach(path)
        if rec and rec["key"] not in subs:
            subs[rec["key"]] = rec
            if rec["cas"]:
                by_cas.setdefault(rec["cas"], []).append(rec["key"])
    classes, cats, has_class, in_cat = set(), set(), set(), set()
    for rec in subs.values():
        for c, p in rec["hazards"]:
            classes.add(c)
            has_class.add((rec["key"], c, p))
        for c in rec["cats"]:
            cats.add(c)
            in_cat.add((rec["key"], c))
    diseases, disease_edges = set(), set()
    for row in ctd_rows(corpus):
        cas = (row.get("CAS") or "").strip()
        name = (row.get("DiseaseName") or "").strip()
        key = disease_key(row)
        if not cas or not cas_ok(cas) or not name or not key or cas not in by_cas:
            continue
        diseases.add(key)
        for s in by_cas[cas]:
            disease_edges.add((s, key))
    organs, organ_edges = set(), set()
    for path in sorted(glob.glob(os.path.join(corpus, "niosh", "*.html"))):
        got = niosh(path)
        if not got or got[0] not in by_cas:
            continue
        for o in got[1]:
            organs.add(o)
            for s in by_cas[got[0]]:
                organ_edges.add((s, o))
    print(f"Substance={len(subs)} Disease={len(diseases)} Organ={len(organs)} "
          f"HazardClass={len(classes)} ProductCategory={len(cats)}")
    print(f"related_to_disease={len(disease_edges)} target_organ={len(organ_edges)} "
          f"has_hazard_class={len(has_class)} in_product_category={len(in_cat)}")


if __name__ == "__main__":
    main(sys.argv[1])
