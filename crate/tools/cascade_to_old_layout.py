#!/usr/bin/env python3
"""Rewrite a stump-based Haar cascade from the nested `<cascade>` layout into
the older `<stages>/<trees>/<feature>` layout read by drowsegate.

Usage: cascade_to_old_layout.py INPUT.xml OUTPUT.xml

Only stump (depth-1) HAAR cascades without tilted features are accepted.
The leading license comment of the input file is copied verbatim.
"""
import re
import sys
import xml.etree.ElementTree as ET


def leading_comment(text):
    m = re.search(r"<!--(.*?)-->", text, re.S)
    return m.group(0) if m else ""


def main(src, dst):
    raw = open(src, encoding="utf-8").read()
    root = ET.fromstring(raw)
    cascade = root.find("cascade")
    if cascade is None:
        sys.exit("input is not a nested-layout cascade")
    if cascade.findtext("featureType").strip() != "HAAR":
        sys.exit("only HAAR cascades are supported")
    width = int(cascade.findtext("width"))
    height = int(cascade.findtext("height"))

    features = []
    for f in cascade.find("features"):
        if (f.findtext("tilted") or "0").strip() != "0":
            sys.exit("tilted features are not supported")
        features.append([r.text.split() for r in f.find("rects")])

    out = ['<?xml version="1.0"?>', leading_comment(raw), "<opencv_storage>",
           '<haarcascade_frontalface type_id="opencv-haar-classifier">',
           "  <size>%d %d</size>" % (width, height), "  <stages>"]
    for si, stage in enumerate(cascade.find("stages")):
        out.append("    <_>")
        out.append("      <!-- stage %d -->" % si)
        out.append("      <trees>")
        for weak in stage.find("weakClassifiers"):
            nodes = weak.findtext("internalNodes").split()
            leaves = weak.findtext("leafValues").split()
            if len(nodes) != 4 or len(leaves) != 2:
                sys.exit("stage %d holds a non-stump tree" % si)
            left, right, idx, thr = nodes
            if (left, right) != ("0", "-1"):
                sys.exit("stage %d holds a non-stump tree" % si)
            out.append("        <_>")
            out.append("          <_>")
            out.append("            <feature>")
            out.append("              <rects>")
            for r in features[int(idx)]:
                out.append("                <_>%s %s %s %s %s</_>" % tuple(r))
            out.append("              </rects>")
            out.append("              <tilted>0</tilted></feature>")
            out.append("            <threshold>%s</threshold>" % thr)
            out.append("            <left_val>%s</left_val>" % leaves[0])
            out.append("            <right_val>%s</right_val></_></_>" % leaves[1])
        out.append("      </trees>")
        out.append("      <stage_threshold>%s</stage_threshold>"
                   % stage.findtext("stageThreshold").strip())
        out.append("      <parent>%d</parent>" % (si - 1))
        out.append("      <next>-1</next></_>")
    out += ["  </stages>", "</haarcascade_frontalface>", "</opencv_storage>", ""]
    open(dst, "w", encoding="utf-8").write("\n".join(out))


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
