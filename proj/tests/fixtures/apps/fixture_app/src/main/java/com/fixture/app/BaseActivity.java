package com.fixture.app;

import android.app.Activity;

/** Common screen behaviour. */
public abstract class BaseActivity extends Activity {
    protected int launches;

    protected void track(String event) {
        launches++;
        Log.d("fixture", event);
    }

    protected abstract void render();
}
