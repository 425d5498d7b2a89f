// Mapping from hovered/selected semantic entities to the set of link names
// the 3D view should tint.

export type Selection =
  | { kind: "pair"; link1: string; link2: string }
  | { kind: "links"; links: string[] }
  | { kind: "end_effector"; parentLink: string; links: string[] }
  | null;

export function highlightedLinks(selection: Selection): Set<string> {
  if (selection === null) {
    return new Set();
  }
  switch (selection.kind) {
    case "pair":
      return new Set([selection.link1, selection.link2]);
    case "links":
      return new Set(selection.links);
    case "end_effector":
      return new Set([selection.parentLink, ...selection.links]);
  }
}
