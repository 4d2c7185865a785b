package com.fixture.app;

public class Widget {
    private final int count;

    public Widget(int count) {
        this.count = count;
    }

    public void draw() {
        // Every other row, plus the tail.
        for (int i = 0; i < count; i++) {
            if (i % 2 == 0 || i > 10) {
                Log.i("widget", "row");
            }
        }
    }
}
