import type { Gps } from "./types.js";

export const DEFAULT_USER = "wearer-a";

// Each preset bundles the GPS fix and scene caption the wearable would
// capture at that spot, so a query can be fired without free-typing context.
export interface ContextPreset {
  label: string;
  gps: Gps;
  sceneText: string;
  spaceLabel: string;
}

export const PRESETS: ContextPreset[] = [
  {
    label: "Home: plant desk",
    gps: { lat: 40.7302, lon: -73.9901 },
    sceneText: "a potted plant on a desk",
    spaceLabel: "home",
  },
  {
    label: "Home: hallway drawer",
    gps: { lat: 40.7302, lon: -73.9901 },
    sceneText: "a hallway drawer by the door",
    spaceLabel: "home",
  },
  {
    label: "Bus stop",
    gps: { lat: 40.735, lon: -73.985 },
    sceneText: "a bus stop sign on a street",
    spaceLabel: "bus stop",
  },
  {
    label: "Corner bistro: sauce shelf",
    gps: { lat: 40.728, lon: -73.998 },
    sceneText: "shelf of sauces, wasabi soy sauce in center",
    spaceLabel: "corner bistro",
  },
  {
    label: "Supermarket",
    gps: { lat: 40.72, lon: -74.005 },
    sceneText: "a supermarket aisle with canned goods",
    spaceLabel: "supermarket",
  },
  {
    label: "Classroom",
    gps: { lat: 40.74, lon: -73.98 },
    sceneText: "a worksheet on a classroom desk",
    spaceLabel: "classroom",
  },
  {
    label: "No context",
    gps: { lat: 40.7302, lon: -73.9901 },
    sceneText: "",
    spaceLabel: "home",
  },
];
